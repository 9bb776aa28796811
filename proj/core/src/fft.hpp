#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace operatrack::detail {

// FFTW wrappers. Plans are created with FFTW_ESTIMATE so results are bit-reproducible;
// plan creation is serialized internally, execution is per-object and thread-compatible.

class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  /// Zero-pads `input` to size() and writes bins() complex values.
  void forward(std::span<const double> input, std::span<std::complex<double>> output);

 private:
  std::size_t size_;
  double* in_;
  void* out_;
  void* plan_;
};

/// Type-I DCT (FFTW REDFT00): the DFT of an even sequence of length 2*(n-1). Unnormalized,
/// so applying it twice scales by 2*(n-1).
class EvenDft {
 public:
  explicit EvenDft(std::size_t n);
  ~EvenDft();
  EvenDft(const EvenDft&) = delete;
  EvenDft& operator=(const EvenDft&) = delete;

  std::size_t size() const { return n_; }
  void transform(std::span<const double> input, std::span<double> output);

 private:
  std::size_t n_;
  double* in_;
  double* out_;
  void* plan_;
};

}  // namespace operatrack::detail
