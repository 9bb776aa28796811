#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "operatrack/error.hpp"
#include "operatrack/features.hpp"
#include "spectral.hpp"

namespace operatrack {

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(length));
  }
  return w;
}

LpcModel lpc_coefficients(std::span<const double> x, int order) {
  if (order < 0) throw ConfigError("LPC order must be non-negative");
  if (static_cast<std::size_t>(order) >= x.size()) {
    throw ConfigError("LPC order must be smaller than the frame length");
  }
  const auto p = static_cast<std::size_t>(order);
  std::vector<double> r(p + 1, 0.0);
  for (std::size_t lag = 0; lag <= p; ++lag) {
    double acc = 0.0;
    for (std::size_t n = lag; n < x.size(); ++n) acc += x[n] * x[n - lag];
    r[lag] = acc;
  }

  LpcModel model;
  model.a.assign(p + 1, 0.0);
  model.a[0] = 1.0;
  model.reflection.assign(p, 0.0);
  model.error = r[0];
  if (!(r[0] > 1e-20 * static_cast<double>(x.size()))) {
    model.degenerate = true;
    return model;
  }

  std::vector<double> prev(p + 1);
  double err = r[0];
  for (std::size_t i = 1; i <= p; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc += model.a[j] * r[i - j];
    const double k = -acc / err;
    if (!(std::abs(k) < 1.0)) {
      // Numerically singular: keep the stable lower-order model.
      model.degenerate = true;
      break;
    }
    prev = model.a;
    for (std::size_t j = 1; j < i; ++j) model.a[j] = prev[j] + k * prev[i - j];
    model.a[i] = k;
    model.reflection[i - 1] = k;
    err *= (1.0 - k * k);
  }
  model.error = err;
  return model;
}

namespace detail {

SpectralWorkspace::SpectralWorkspace(std::size_t frame_length, std::size_t fft_size)
    : frame_length_(frame_length),
      window_(hann_window(frame_length)),
      buffer_(frame_length),
      spectrum_(fft_size / 2 + 1),
      fft_(fft_size),
      even_dft_(fft_size / 2 + 1),
      cepstrum_(fft_size / 2 + 1) {
  if (frame_length == 0) throw ConfigError("frame length must be >= 1");
  if (fft_size < frame_length) throw ConfigError("fft_size must be >= frame length");
}

void SpectralWorkspace::windowed(std::span<const double> frame) {
  for (std::size_t n = 0; n < frame_length_; ++n) buffer_[n] = frame[n] * window_[n];
}

void SpectralWorkspace::power_spectrum(std::span<const double> frame, std::span<double> out) {
  windowed(frame);
  fft_.forward(buffer_, spectrum_);
  const double scale = 1.0 / static_cast<double>(frame_length_);
  for (std::size_t k = 0; k < spectrum_.size(); ++k) out[k] = std::norm(spectrum_[k]) * scale;
}

SpectralEnvelope SpectralWorkspace::lpc_envelope(std::span<const double> frame, int order) {
  if (static_cast<std::size_t>(order) + 1 > fft_.size()) {
    throw ConfigError("LPC order must be smaller than fft_size");
  }
  windowed(frame);
  const LpcModel model = lpc_coefficients(buffer_, order);
  SpectralEnvelope env;
  env.values.assign(bins(), kLpcFloor);
  if (model.degenerate && model.error <= 1e-20 * static_cast<double>(frame_length_)) {
    env.flagged = true;
    return env;
  }
  env.flagged = model.degenerate;
  fft_.forward(model.a, spectrum_);
  const double gain = model.error / static_cast<double>(frame_length_);
  for (std::size_t k = 0; k < bins(); ++k) {
    const double mag2 = std::max(std::norm(spectrum_[k]), 1e-300);
    env.values[k] = std::max(gain / mag2, kLpcFloor);
  }
  return env;
}

void SpectralWorkspace::cepstral_smooth(std::span<const double> log_amplitude, int cepstral_order,
                                        std::span<double> out) {
  const std::size_t n = even_dft_.size();
  even_dft_.transform(log_amplitude, cepstrum_);
  const double scale = 1.0 / static_cast<double>(2 * (n - 1));
  const auto keep = static_cast<std::size_t>(std::max(cepstral_order, 0));
  for (std::size_t q = 0; q < n; ++q) cepstrum_[q] = q <= keep ? cepstrum_[q] * scale : 0.0;
  even_dft_.transform(cepstrum_, out);
}

SpectralEnvelope SpectralWorkspace::true_envelope(std::span<const double> spectrum,
                                                  int cepstral_order, double tol, int max_iter) {
  const std::size_t n = bins();
  if (spectrum.size() != n) throw ConfigError("true_envelope: spectrum size does not match fft grid");
  const double peak = *std::max_element(spectrum.begin(), spectrum.end());
  const double floor = std::max(peak * 1e-10, 1e-30);

  std::vector<double> current(n), smooth(n);
  for (std::size_t k = 0; k < n; ++k) current[k] = 0.5 * std::log(std::max(spectrum[k], floor));

  SpectralEnvelope env;
  env.flagged = true;
  for (int it = 0; it < max_iter; ++it) {
    cepstral_smooth(current, cepstral_order, smooth);
    env.iterations = it + 1;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, current[k] - smooth[k]);
    if (worst <= tol) {
      env.flagged = false;
      break;
    }
    for (std::size_t k = 0; k < n; ++k) current[k] = std::max(current[k], smooth[k]);
  }
  env.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) env.values[k] = std::exp(2.0 * smooth[k]);
  return env;
}

}  // namespace detail

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_size) {
  if (frame.empty()) throw ConfigError("power_spectrum: empty frame");
  detail::SpectralWorkspace ws(frame.size(), fft_size);
  std::vector<double> out(ws.bins());
  ws.power_spectrum(frame, out);
  return out;
}

SpectralEnvelope lpc_envelope(std::span<const double> frame, int order, std::size_t fft_size) {
  if (frame.empty()) throw ConfigError("lpc_envelope: empty frame");
  detail::SpectralWorkspace ws(frame.size(), fft_size);
  return ws.lpc_envelope(frame, order);
}

SpectralEnvelope true_envelope(std::span<const double> spectrum, int cepstral_order, double tol,
                               int max_iter) {
  if (spectrum.size() < 2) throw ConfigError("true_envelope: need at least two bins");
  if (cepstral_order < 1 || !(tol > 0.0) || max_iter < 1) {
    throw ConfigError("true_envelope: order, tol and max_iter must be positive");
  }
  const std::size_t fft_size = 2 * (spectrum.size() - 1);
  detail::SpectralWorkspace ws(1, fft_size);
  return ws.true_envelope(spectrum, cepstral_order, tol, max_iter);
}

std::vector<double> cepstral_smooth(std::span<const double> log_amplitude, int cepstral_order) {
  if (log_amplitude.size() < 2) throw ConfigError("cepstral_smooth: need at least two bins");
  detail::SpectralWorkspace ws(1, 2 * (log_amplitude.size() - 1));
  std::vector<double> out(log_amplitude.size());
  ws.cepstral_smooth(log_amplitude, cepstral_order, out);
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// Integral of the triangle (lo, mid, hi) with unit peak over [a, b].
double triangle_integral(double lo, double mid, double hi, double a, double b) {
  auto value = [&](double f) {
    if (f <= lo || f >= hi) return 0.0;
    return f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
  };
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (b <= a) return 0.0;
  double knots[4] = {a, b, b, b};
  std::size_t nk = 2;
  if (mid > a && mid < b) {
    knots[1] = mid;
    knots[2] = b;
    nk = 3;
  }
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < nk; ++i) {
    area += 0.5 * (value(knots[i]) + value(knots[i + 1])) * (knots[i + 1] - knots[i]);
  }
  return area;
}

}  // namespace

MelFilterbank::MelFilterbank(int sample_rate_hz, std::size_t fft_size, int n_mels)
    : bins_(fft_size / 2 + 1) {
  if (n_mels < 1) throw ConfigError("mel filterbank needs n_mels >= 1");
  if (sample_rate_hz <= 0 || fft_size < 2) throw ConfigError("mel filterbank: invalid rate or fft size");
  if (static_cast<std::size_t>(n_mels) > bins_) throw ConfigError("filterbank overdetermined");

  const double nyquist = sample_rate_hz / 2.0;
  const double top = hz_to_mel(nyquist);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  edges.front() = 0.0;
  edges.back() = nyquist;

  const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(fft_size);
  rows_.resize(static_cast<std::size_t>(n_mels));
  centers_.resize(static_cast<std::size_t>(n_mels));
  for (std::size_t m = 0; m < rows_.size(); ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    centers_[m] = mid;
    std::vector<double> dense(bins_, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < bins_; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double a = std::max(0.0, f - 0.5 * bin_hz);
      const double b = std::min(nyquist, f + 0.5 * bin_hz);
      dense[k] = triangle_integral(lo, mid, hi, a, b);
      total += dense[k];
    }
    if (!(total > 0.0)) throw ConfigError("filterbank overdetermined");
    std::size_t first = 0;
    while (dense[first] == 0.0) ++first;
    std::size_t last = bins_;
    while (dense[last - 1] == 0.0) --last;
    rows_[m].first = first;
    rows_[m].weights.assign(dense.begin() + static_cast<std::ptrdiff_t>(first),
                            dense.begin() + static_cast<std::ptrdiff_t>(last));
    for (double& w : rows_[m].weights) w /= total;
  }
}

double MelFilterbank::weight(int m, std::size_t k) const {
  const Row& row = rows_[static_cast<std::size_t>(m)];
  if (k < row.first || k >= row.first + row.weights.size()) return 0.0;
  return row.weights[k - row.first];
}

void MelFilterbank::apply(std::span<const double> spectrum, std::span<double> mel_energies) const {
  if (spectrum.size() != bins_) throw ConfigError("mel filterbank: spectrum bin count mismatch");
  for (std::size_t m = 0; m < rows_.size(); ++m) {
    const Row& row = rows_[m];
    double acc = 0.0;
    for (std::size_t i = 0; i < row.weights.size(); ++i) acc += row.weights[i] * spectrum[row.first + i];
    mel_energies[m] = acc;
  }
}

std::vector<double> dct2_orthonormal(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (i + 0.5) / static_cast<double>(n));
    }
    out[k] = s * acc;
  }
  return out;
}

std::vector<double> idct2_orthonormal(std::span<const double> c) {
  const std::size_t n = c.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      acc += s * c[k] * std::cos(std::numbers::pi * static_cast<double>(k) * (i + 0.5) / static_cast<double>(n));
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace operatrack
