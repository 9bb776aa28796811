#pragma once

// Independent reference computations for the test suites. Nothing here calls into the
// library's numeric code; each oracle is the slow, obvious formulation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

/// splitmix64 stream with its own uniform/normal draws, so generated cases do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  std::size_t index(std::size_t n);  // [0, n)
  std::vector<double> vector(std::size_t n, double lo, double hi);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::vector<double> sine(double freq_hz, int sample_rate_hz, std::size_t n, double amplitude = 1.0,
                         double phase = 0.0);
double rms(std::span<const double> x);

/// Periodic Hann window then direct DFT: |X_k|^2 / L for k in [0, nfft/2].
std::vector<double> dft_power_spectrum(std::span<const double> frame, std::size_t nfft);
/// Energy of the periodic-Hann-windowed frame.
double windowed_energy(std::span<const double> frame);
/// Frequency of the largest Hann-windowed DTFT magnitude on a grid from lo to hi.
double peak_frequency_hz(std::span<const double> x, int sample_rate_hz, double lo_hz, double hi_hz,
                         double step_hz);

/// Monic polynomial coefficients [1, c1, ..., cn] with the given complex-conjugate pole pairs
/// (radius, angle in radians), expanded directly.
std::vector<double> polynomial_from_pole_pairs(const std::vector<std::pair<double, double>>& poles);
/// x[n] = e[n] - sum_{i>=1} a[i] x[n-i], unit-variance white e, after a burn-in.
std::vector<double> ar_process(std::span<const double> a, std::size_t n, Rng& rng, std::size_t burn_in = 2000);

/// Minimum cost over every monotone path from (0,0) to (rows-1, cols-1) with diagonal,
/// row-advancing ("vertical") and column-advancing ("horizontal") unit steps, enumerated
/// one path at a time. cost = d(0,0) + sum(step weight * d(cell)).
double exhaustive_min_path_cost(const std::vector<std::vector<double>>& d, double w_diag,
                                double w_vert, double w_horiz);

/// floor((n - window) / hop) + 1 full frames, plus one padded tail frame when samples remain;
/// at least one frame.
std::size_t expected_frame_count(std::size_t n, std::size_t window, std::size_t hop);

}  // namespace oracle
