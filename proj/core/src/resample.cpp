#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "operatrack/audio_io.hpp"
#include "operatrack/error.hpp"

namespace operatrack {

namespace {

constexpr double kCutoffFraction = 0.95;
constexpr double kZeroCrossings = 16.0;
constexpr double kKaiserBeta = 8.6;
constexpr long kMaxTablePhases = 2048;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

struct Kernel {
  double fc;          // cutoff in cycles per input sample
  double half_width;  // in input samples
  double i0_beta;

  double operator()(double x) const {
    const double r = x / half_width;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double w = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    return 2.0 * fc * sinc(2.0 * fc * x) * w;
  }
};

Kernel make_kernel(int source_sr, int target_sr) {
  const double cutoff_hz = kCutoffFraction * 0.5 * std::min(source_sr, target_sr);
  Kernel k;
  k.fc = cutoff_hz / source_sr;
  k.half_width = kZeroCrossings / (2.0 * k.fc);
  k.i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  return k;
}

}  // namespace

std::size_t resampler_lookahead(int source_sr_hz, int target_sr_hz) {
  if (source_sr_hz == target_sr_hz) return 0;
  return static_cast<std::size_t>(std::ceil(make_kernel(source_sr_hz, target_sr_hz).half_width));
}

AudioBuffer resample(const AudioBuffer& audio, int target_sr_hz) {
  if (target_sr_hz <= 0) {
    throw ConfigError("target sample rate must be positive, got " + std::to_string(target_sr_hz));
  }
  const int source_sr = audio.sample_rate_hz();
  if (target_sr_hz == source_sr) return audio;

  const long g = std::gcd(source_sr, target_sr_hz);
  const long up = target_sr_hz / g;    // L
  const long down = source_sr / g;     // M
  const Kernel kernel = make_kernel(source_sr, target_sr_hz);
  const long taps_half = static_cast<long>(std::ceil(kernel.half_width));
  const long taps = 2 * taps_half;

  const auto in = audio.samples();
  const long n_in = static_cast<long>(in.size());
  const long n_out = static_cast<long>((static_cast<__int128>(n_in) * up + down - 1) / down);

  // One tap table per fractional phase; output sample n sits at input position n*M/L.
  const bool tabulate = up <= kMaxTablePhases;
  std::vector<double> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (long phase = 0; phase < up; ++phase) {
      const double frac = static_cast<double>(phase) / static_cast<double>(up);
      for (long m = 0; m < taps; ++m) {
        table[static_cast<std::size_t>(phase * taps + m)] =
            kernel(frac + static_cast<double>(taps_half - 1 - m));
      }
    }
  }

  std::vector<double> out(static_cast<std::size_t>(n_out));
  std::vector<double> scratch(static_cast<std::size_t>(taps));
  for (long n = 0; n < n_out; ++n) {
    const long long pos = static_cast<long long>(n) * down;
    const long base = static_cast<long>(pos / up);
    const long phase = static_cast<long>(pos % up);
    const double* h;
    if (tabulate) {
      h = &table[static_cast<std::size_t>(phase * taps)];
    } else {
      const double frac = static_cast<double>(phase) / static_cast<double>(up);
      for (long m = 0; m < taps; ++m) scratch[static_cast<std::size_t>(m)] = kernel(frac + static_cast<double>(taps_half - 1 - m));
      h = scratch.data();
    }
    const long first = base - taps_half + 1;
    const long m_begin = std::max(0L, -first);
    const long m_end = std::min(taps, n_in - first);
    double acc = 0.0;
    for (long m = m_begin; m < m_end; ++m) acc += h[m] * in[static_cast<std::size_t>(first + m)];
    out[static_cast<std::size_t>(n)] = acc;
  }
  return AudioBuffer(std::move(out), target_sr_hz);
}

}  // namespace operatrack
