#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include "operatrack/error.hpp"
#include "operatrack/feature_io.hpp"
#include "operatrack/features.hpp"
#include "oracles.hpp"

using namespace operatrack;

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

AudioBuffer harmonic_tone(double f0, double seconds, int sr) {
  std::vector<double> x(static_cast<std::size_t>(seconds * sr), 0.0);
  for (int h = 1; h <= 8; ++h) {
    const auto s = oracle::sine(f0 * h, sr, x.size(), 0.3 / h);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s[i];
  }
  return AudioBuffer(x, sr);
}

}  // namespace

TEST_CASE("power spectrum matches a direct DFT") {
  oracle::Rng rng(1);
  for (std::size_t len : {30u, 120u, 882u}) {
    const auto frame = rng.vector(len, -1.0, 1.0);
    const std::size_t nfft = std::bit_ceil(len) * 2;
    const auto got = power_spectrum(frame, nfft);
    const auto want = oracle::dft_power_spectrum(frame, nfft);
    REQUIRE(got.size() == nfft / 2 + 1);
    const double scale = *std::max_element(want.begin(), want.end());
    CHECK(max_abs_diff(got, want) <= 1e-9 * scale);
  }
}

TEST_CASE("power spectrum of silence is zero") {
  const std::vector<double> zeros(882, 0.0);
  for (double v : power_spectrum(zeros, 1024)) CHECK(v == 0.0);
}

TEST_CASE("Parseval: one-sided spectrum carries the windowed energy") {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 16 + rng.index(1000);
    const std::size_t nfft = std::bit_ceil(len);
    const auto frame = rng.vector(len, -1.0, 1.0);
    const auto p = power_spectrum(frame, nfft);
    // |X_k|^2 = L * p_k; interior bins count twice in the one-sided sum.
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) sum += (k == 0 || k + 1 == p.size() ? 1.0 : 2.0) * p[k];
    sum *= static_cast<double>(len) / static_cast<double>(nfft);
    const double energy = oracle::windowed_energy(frame);
    CHECK(std::abs(sum - energy) <= 1e-6 * energy);
  }
}

TEST_CASE("a bin-centred sine concentrates its energy in one bin") {
  const std::size_t nfft = 1024;
  const int sr = 44100;
  const double f = 100.0 * sr / static_cast<double>(nfft);
  const auto frame = oracle::sine(f, sr, nfft);
  const auto p = power_spectrum(frame, nfft);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  // The periodic Hann window spreads a centred tone over three bins as 1/4, 1/16, 1/16 of
  // |X|^2: two thirds of the energy sits in the peak bin, the rest in its two neighbours.
  CHECK(p[100] / total == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK((p[99] + p[100] + p[101]) / total > 0.999);
}

TEST_CASE("LPC recovers AR(4) coefficients") {
  const auto a = oracle::polynomial_from_pole_pairs({{0.9, 0.25 * std::numbers::pi}, {0.8, 0.6 * std::numbers::pi}});
  REQUIRE(a.size() == 5);
  std::vector<double> mean_err(5, 0.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    oracle::Rng rng(1000 + seed);
    const auto x = oracle::ar_process(a, 20000, rng);
    const LpcModel m = lpc_coefficients(x, 4);
    REQUIRE(m.a.size() == 5);
    CHECK(m.a[0] == 1.0);
    for (std::size_t i = 1; i < 5; ++i) mean_err[i] += std::abs(m.a[i] - a[i]) / 50.0;
    for (double k : m.reflection) CHECK(std::abs(k) < 1.0);
  }
  for (std::size_t i = 1; i < 5; ++i) CHECK(mean_err[i] < 1e-2);
}

TEST_CASE("LPC envelope of white noise is flat") {
  oracle::Rng rng(4);
  const std::size_t len = 882, nfft = 1024;
  std::vector<double> mean_db(nfft / 2 + 1, 0.0);
  for (int f = 0; f < 100; ++f) {
    std::vector<double> frame(len);
    for (auto& v : frame) v = 0.1 * rng.normal();
    const auto env = lpc_envelope(frame, 10, nfft);
    for (std::size_t k = 0; k < env.values.size(); ++k) mean_db[k] += 10.0 * std::log10(env.values[k]) / 100.0;
  }
  const double centre = std::accumulate(mean_db.begin(), mean_db.end() - 1, 0.0) / static_cast<double>(mean_db.size() - 1);
  for (std::size_t k = 0; k + 1 < mean_db.size(); ++k) CHECK(std::abs(mean_db[k] - centre) <= 3.0);
}

TEST_CASE("LPC order 0 is the frame power; silence is flagged") {
  oracle::Rng rng(6);
  const auto frame = rng.vector(300, -1.0, 1.0);
  const auto env = lpc_envelope(frame, 0, 512);
  const double power = oracle::windowed_energy(frame) / 300.0;
  for (double v : env.values) CHECK(v == doctest::Approx(power).epsilon(1e-12));

  const std::vector<double> silent(300, 0.0);
  const auto flat = lpc_envelope(silent, 8, 512);
  CHECK(flat.flagged);
  for (double v : flat.values) CHECK(v == kLpcFloor);
}

TEST_CASE("LPC envelope reaches the strongest peak of a voiced frame") {
  // Pulse train through two resonances: the all-pole fit should not sit far below the peak.
  const int sr = 8000;
  const std::size_t len = 160, nfft = 512;
  std::vector<double> x(len, 0.0);
  for (std::size_t i = 0; i < len; i += 40) x[i] = 1.0;
  const auto a = oracle::polynomial_from_pole_pairs({{0.95, 2.0 * std::numbers::pi * 700.0 / sr},
                                                     {0.9, 2.0 * std::numbers::pi * 1800.0 / sr}});
  std::vector<double> y(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double v = x[t];
    for (std::size_t i = 1; i < a.size() && i <= t; ++i) v -= a[i] * y[t - i];
    y[t] = v;
  }
  const auto p = power_spectrum(y, nfft);
  const auto env = lpc_envelope(y, 10, nfft);
  const std::size_t peak = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  CHECK(10.0 * std::log10(env.values[peak] / p[peak]) > -6.0);
}

TEST_CASE("DCT-II is orthonormal") {
  oracle::Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = rng.vector(1 + rng.index(200), -5.0, 5.0);
    const auto back = idct2_orthonormal(dct2_orthonormal(x));
    CHECK(max_abs_diff(x, back) < 1e-9);
  }
  const std::vector<double> flat(40, 3.0);
  const auto c = dct2_orthonormal(flat);
  CHECK(c[0] == doctest::Approx(3.0 * std::sqrt(40.0)));
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-9);
}

TEST_CASE("True Envelope of a flat spectrum is the spectrum after one iteration") {
  const std::vector<double> flat(513, 0.25);
  const auto env = true_envelope(flat, 20, 0.1, 200);
  CHECK(env.iterations == 1);
  CHECK_FALSE(env.flagged);
  for (double v : env.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("True Envelope covers harmonic peaks") {
  const std::size_t bins = 513;
  const double tol = 0.1;
  std::vector<double> comb(bins, 1e-6);
  std::vector<std::size_t> peaks;
  for (std::size_t k = 20; k < bins; k += 20) {
    comb[k] = std::exp(-static_cast<double>(k) / 200.0);
    peaks.push_back(k);
  }
  const auto env = true_envelope(comb, 24, tol, 200);
  CHECK_FALSE(env.flagged);
  for (std::size_t k : peaks) {
    // Log amplitude is half the log power.
    CHECK(0.5 * std::log(env.values[k]) >= 0.5 * std::log(comb[k]) - tol - 1e-12);
  }
}

TEST_CASE("True Envelope converges on random spectra and stays above the smoothed spectrum") {
  oracle::Rng rng(10);
  const double tol = 0.1;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t bins = 65 + rng.index(450);
    std::vector<double> spectrum(bins);
    for (auto& v : spectrum) v = std::exp(rng.uniform(-8.0, 2.0));
    const int order = 4 + static_cast<int>(rng.index(20));
    const auto env = true_envelope(spectrum, order, tol, 200);
    CHECK_FALSE(env.flagged);
    CHECK(env.iterations <= 200);

    std::vector<double> log_amp(bins);
    for (std::size_t k = 0; k < bins; ++k) log_amp[k] = 0.5 * std::log(spectrum[k]);
    const auto smoothed = cepstral_smooth(log_amp, order);
    for (std::size_t k = 0; k < bins; ++k) {
      const double v = 0.5 * std::log(env.values[k]);
      CHECK(v >= smoothed[k] - tol);
      CHECK(v >= log_amp[k] - tol - 1e-9);
    }
  }
}

TEST_CASE("mel filterbank rows") {
  for (auto [sr, nfft, n] : {std::tuple{44100, 1024, 120}, std::tuple{1500, 64, 25}, std::tuple{1500, 512, 200},
                             std::tuple{6000, 128, 50}}) {
    const MelFilterbank fb(sr, static_cast<std::size_t>(nfft), n);
    CHECK(fb.n_mels() == n);
    for (int m = 0; m < n; ++m) {
      double sum = 0.0;
      for (std::size_t k = 0; k < fb.bins(); ++k) {
        CHECK(fb.weight(m, k) >= 0.0);
        sum += fb.weight(m, k);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Coverage between first and last centre.
    const double bin_hz = static_cast<double>(sr) / nfft;
    for (std::size_t k = 0; k < fb.bins(); ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f < fb.center_hz(0) || f > fb.center_hz(n - 1)) continue;
      double cover = 0.0;
      for (int m = 0; m < n; ++m) cover += fb.weight(m, k);
      CHECK(cover > 0.0);
    }
  }
}

TEST_CASE("single mel filter spans the band; too many filters are rejected") {
  const MelFilterbank one(8000, 256, 1);
  std::size_t support = 0;
  for (std::size_t k = 0; k < one.bins(); ++k) support += one.weight(0, k) > 0.0;
  CHECK(support >= one.bins() - 2);
  CHECK_THROWS_WITH_AS(MelFilterbank(1500, 32, 40), "filterbank overdetermined", ConfigError);
}

TEST_CASE("mfcc output lengths and a constant spectrum") {
  const FeatureConfig base = FeatureConfig::baseline();
  CHECK(base.sample_rate_hz == 44100);
  CHECK(base.n_mfcc == 100);
  CHECK(base.skip == 20);
  const std::vector<double> spec(base.fft_size() / 2 + 1, 0.5);
  CHECK(mfcc(spec, base).size() == 100);

  const FeatureConfig rec = FeatureConfig::recitative();
  CHECK(rec.kind == SpectrumKind::Lpc);
  CHECK(mfcc(std::vector<double>(rec.fft_size() / 2 + 1, 0.5), rec).size() == 25);

  FeatureConfig c = base;
  c.skip = 0;
  c.n_mfcc = 40;
  const auto coeffs = mfcc(std::vector<double>(c.fft_size() / 2 + 1, 0.5), c);
  CHECK(coeffs[0] == doctest::Approx(std::log(0.5) * std::sqrt(40.0)));
  for (std::size_t k = 1; k < coeffs.size(); ++k) CHECK(std::abs(coeffs[k]) < 1e-9);
}

TEST_CASE("config rules") {
  FeatureConfig c;
  c.n_mels = 50;
  c.n_mfcc = 40;
  c.skip = 20;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.skip = 10;
  CHECK_NOTHROW(c.validate());

  FeatureConfig low = FeatureConfig::recitative();
  CHECK(low.window_samples() == 30);
  CHECK(low.fft_size() == 64);
  CHECK(low.resolved_lpc_order() == 4);
  low.n_mfcc = 200;
  CHECK(low.fft_size() == 512);

  FeatureConfig g = FeatureConfig::baseline();
  CHECK_THROWS_AS(g.validate_grid_values(), ConfigError);
  g.skip = 5;
  CHECK_NOTHROW(g.validate_grid_values());
  g.sample_rate_hz = 8000;
  CHECK_THROWS_AS(g.validate_grid_values(), ConfigError);
}

TEST_CASE("ten seconds of audio give 999 feature rows") {
  const AudioBuffer a = harmonic_tone(220.0, 10.0, 44100);
  for (auto kind : {SpectrumKind::Spec, SpectrumKind::Lpc, SpectrumKind::TrueEnvelope}) {
    FeatureConfig c;
    c.kind = kind;
    c.sample_rate_hz = 6000;
    c.n_mfcc = 25;
    c.skip = 0;
    const FeatureMatrix m = extract_features(a, c);
    CHECK(m.rows() == 999);
    CHECK(m.dims() == 25);
    for (std::size_t r = 0; r < m.rows(); r += 50)
      for (float v : m.row(r)) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("extraction is deterministic and the spectrum kinds differ") {
  const AudioBuffer a = harmonic_tone(180.0, 2.0, 22050);
  FeatureConfig c = FeatureConfig::recitative();
  const FeatureMatrix lpc1 = extract_features(a, c);
  const FeatureMatrix lpc2 = extract_features(a, c);
  CHECK(lpc1 == lpc2);
  c.kind = SpectrumKind::Spec;
  const FeatureMatrix spec = extract_features(a, c);
  REQUIRE(spec.rows() == lpc1.rows());
  float diff = 0.0f;
  for (std::size_t r = 0; r < spec.rows(); ++r)
    for (std::size_t d = 0; d < spec.dims(); ++d) diff = std::max(diff, std::abs(spec.row(r)[d] - lpc1.row(r)[d]));
  CHECK(diff > 0.0f);
}

TEST_CASE("extraction is causal") {
  // Row k may read samples up to k * hop + window at the feature rate, plus the resampler's
  // reach. Truncating the input after that point must not change row k.
  const AudioBuffer a = harmonic_tone(200.0, 3.0, 44100);
  FeatureConfig c = FeatureConfig::recitative();
  const FeatureMatrix full = extract_features(a, c);
  const std::size_t k = 150;
  const std::size_t src_hop = 441, src_window = 882;
  const std::size_t keep = k * src_hop + src_window + resampler_lookahead(44100, c.sample_rate_hz) + 64;
  const AudioBuffer cut(std::vector<double>(a.samples().begin(), a.samples().begin() + static_cast<std::ptrdiff_t>(keep)), 44100);
  const FeatureMatrix part = extract_features(cut, c);
  REQUIRE(part.rows() > k);
  for (std::size_t r = 0; r <= k; ++r)
    for (std::size_t d = 0; d < full.dims(); ++d) REQUIRE(part.row(r)[d] == full.row(r)[d]);
}

TEST_CASE("feature matrices round-trip through the binary format") {
  oracle::Rng rng(12);
  std::vector<float> values(7 * 5);
  for (auto& v : values) v = static_cast<float>(rng.uniform(-10.0, 10.0));
  const FeatureMatrix m(7, 5, 10.0, values);
  const std::string bytes = encode_feature_binary(m);
  CHECK(bytes.size() == 16 + values.size() * 4);
  CHECK(bytes.substr(0, 4) == "OTFM");
  CHECK(decode_feature_binary(bytes) == m);
  CHECK_THROWS_AS(decode_feature_binary(bytes.substr(0, 20)), DataError);
  CHECK(feature_csv(m).rfind("frame,time_s,c0,", 0) == 0);
}
