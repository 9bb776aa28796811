#pragma once

// Reusable-workspace versions of the spectral estimators in features.hpp.

#include <complex>
#include <span>
#include <vector>

#include "fft.hpp"
#include "operatrack/features.hpp"

namespace operatrack::detail {

class SpectralWorkspace {
 public:
  SpectralWorkspace(std::size_t frame_length, std::size_t fft_size);

  std::size_t fft_size() const { return fft_.size(); }
  std::size_t bins() const { return fft_.bins(); }

  void power_spectrum(std::span<const double> frame, std::span<double> out);
  SpectralEnvelope lpc_envelope(std::span<const double> frame, int order);
  SpectralEnvelope true_envelope(std::span<const double> spectrum, int cepstral_order, double tol,
                                 int max_iter);
  void cepstral_smooth(std::span<const double> log_amplitude, int cepstral_order,
                       std::span<double> out);

 private:
  void windowed(std::span<const double> frame);

  std::size_t frame_length_;
  std::vector<double> window_;
  std::vector<double> buffer_;
  std::vector<std::complex<double>> spectrum_;
  RealFft fft_;
  EvenDft even_dft_;
  std::vector<double> cepstrum_;
};

}  // namespace operatrack::detail
