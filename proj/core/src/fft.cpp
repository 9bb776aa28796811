#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace operatrack::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2) throw std::invalid_argument("RealFft size must be >= 2");
  std::lock_guard lock(planner_mutex());
  in_ = fftw_alloc_real(size_);
  out_ = fftw_alloc_complex(bins());
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), in_, static_cast<fftw_complex*>(out_),
                               FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(in_);
  fftw_free(out_);
}

void RealFft::forward(std::span<const double> input, std::span<std::complex<double>> output) {
  const std::size_t n = std::min(input.size(), size_);
  std::copy_n(input.begin(), n, in_);
  std::fill(in_ + n, in_ + size_, 0.0);
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* c = static_cast<const fftw_complex*>(out_);
  for (std::size_t k = 0; k < bins(); ++k) output[k] = {c[k][0], c[k][1]};
}

EvenDft::EvenDft(std::size_t n) : n_(n) {
  if (n < 2) throw std::invalid_argument("EvenDft size must be >= 2");
  std::lock_guard lock(planner_mutex());
  in_ = fftw_alloc_real(n_);
  out_ = fftw_alloc_real(n_);
  plan_ = fftw_plan_r2r_1d(static_cast<int>(n_), in_, out_, FFTW_REDFT00, FFTW_ESTIMATE);
}

EvenDft::~EvenDft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(in_);
  fftw_free(out_);
}

void EvenDft::transform(std::span<const double> input, std::span<double> output) {
  std::copy_n(input.begin(), n_, in_);
  fftw_execute(static_cast<fftw_plan>(plan_));
  std::copy_n(out_, n_, output.begin());
}

}  // namespace operatrack::detail
