#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "operatrack/error.hpp"
#include "operatrack/fusion.hpp"
#include "oracles.hpp"

using namespace operatrack;

namespace {

CumulativeDistanceVector vec(std::size_t start, std::vector<double> v) { return {start, std::move(v)}; }

std::shared_ptr<const FeatureMatrix> random_walk(std::size_t rows, std::size_t dims, oracle::Rng& rng) {
  FeatureMatrix m(rows, dims);
  std::vector<double> x(dims, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t d = 0; d < dims; ++d) {
      x[d] += 0.3 * rng.normal();
      m.row(r)[d] = static_cast<float>(x[d]);
    }
  }
  return std::make_shared<const FeatureMatrix>(std::move(m));
}

// Reference with a tempo-varied copy as target: target row t shows reference row floor(t * rate).
FeatureMatrix warped(const FeatureMatrix& ref, double rate, std::size_t rows) {
  FeatureMatrix m(rows, ref.dims());
  for (std::size_t t = 0; t < rows; ++t) {
    const auto src = ref.row(std::min(ref.rows() - 1, static_cast<std::size_t>(static_cast<double>(t) * rate)));
    std::copy(src.begin(), src.end(), m.row(t).begin());
  }
  return m;
}

}  // namespace

TEST_CASE("strategy and weight mode names") {
  for (auto s : {FusionStrategy::Late, FusionStrategy::Speech, FusionStrategy::Music, FusionStrategy::MusicAndSpeech})
    CHECK(parse_fusion_strategy(to_string(s)) == s);
  CHECK(parse_weight_mode("constant") == WeightMode::ConstantMean);
  CHECK(parse_weight_mode("weighted") == WeightMode::LinearWeighted);
  CHECK_THROWS_AS(parse_fusion_strategy("hsmm"), ConfigError);
  CHECK_THROWS_AS(parse_weight_mode("median"), ConfigError);
}

TEST_CASE("weight estimator examples") {
  WeightEstimator c(WeightMode::ConstantMean);
  CHECK(c.capacity() == 25);
  CHECK(c.weight() == 0.0);
  for (int i = 0; i < 20; ++i) c.update(0.0);
  double w = 0.0;
  for (int i = 0; i < 5; ++i) w = c.update(1.0).weight;
  CHECK(w == doctest::Approx(0.2));

  WeightEstimator ones(WeightMode::ConstantMean);
  for (int i = 0; i < 40; ++i) w = ones.update(1.0).weight;
  CHECK(w == 1.0);
  CHECK(ones.size() == 25);

  WeightEstimator lw(WeightMode::LinearWeighted);
  CHECK(lw.capacity() == 50);
  oracle::Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    WeightEstimator e(WeightMode::LinearWeighted);
    const double p = rng.uniform();
    const std::size_t n = 1 + rng.index(80);
    for (std::size_t i = 0; i < n; ++i) w = e.update(p).weight;
    CHECK(w == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("fewer entries than capacity use what exists") {
  WeightEstimator c(WeightMode::ConstantMean);
  c.update(1.0);
  CHECK(c.update(0.0).weight == doctest::Approx(0.5));

  // Linear coefficients k/n for the k-th oldest of n entries: two entries weigh 1/2 and 1.
  WeightEstimator l(WeightMode::LinearWeighted);
  l.update(0.0);
  CHECK(l.update(1.0).weight == doctest::Approx(1.0 / 1.5));
}

TEST_CASE("linear weighting matches the direct weighted mean over a full window") {
  oracle::Rng rng(2);
  WeightEstimator e(WeightMode::LinearWeighted);
  std::vector<double> all;
  double got = 0.0;
  for (int i = 0; i < 130; ++i) {
    all.push_back(rng.uniform());
    got = e.update(all.back()).weight;
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < 50; ++k) {
    const double a = static_cast<double>(k + 1) / 50.0;
    num += a * all[all.size() - 50 + k];
    den += a;
  }
  CHECK(got == doctest::Approx(num / den).epsilon(1e-12));
  CHECK(e.size() == 50);
}

TEST_CASE("out-of-range probabilities are clamped and flagged") {
  WeightEstimator e(WeightMode::ConstantMean);
  auto u = e.update(1.7);
  CHECK(u.clamped);
  CHECK(u.weight == 1.0);
  u = e.update(-0.5);
  CHECK(u.clamped);
  CHECK(u.weight == doctest::Approx(0.5));
  CHECK_FALSE(e.update(0.5).clamped);
  CHECK(e.update(std::numeric_limits<double>::quiet_NaN()).clamped);
}

TEST_CASE("weights stay in [0, 1] for arbitrary streams") {
  oracle::Rng rng(3);
  for (auto mode : {WeightMode::ConstantMean, WeightMode::LinearWeighted}) {
    WeightEstimator e(mode);
    for (int i = 0; i < 2000; ++i) {
      const double w = e.update(rng.uniform(-1.0, 2.0)).weight;
      REQUIRE(w >= 0.0);
      REQUIRE(w <= 1.0);
      REQUIRE(e.size() <= e.capacity());
    }
  }
}

TEST_CASE("fusion examples") {
  const auto v = vec(7, {3.0, 1.0, 2.0});
  const auto s = vec(7, {0.5, 4.0, 9.0});
  CHECK(fuse(v, v, FusionStrategy::Late, {}).values == v.values);
  CHECK(fuse(v, s, FusionStrategy::Speech, {0.3, 0.0}).values == v.values);
  CHECK(fuse(v, s, FusionStrategy::Speech, {0.3, 1.0}).values == s.values);
  CHECK(fuse(v, s, FusionStrategy::Music, {1.0, 0.6}).values == v.values);
  CHECK(fuse(v, s, FusionStrategy::Music, {0.0, 0.6}).values == s.values);

  const auto ms = fuse(v, s, FusionStrategy::MusicAndSpeech, {1.0, 1.0});
  const auto late = fuse(v, s, FusionStrategy::Late, {});
  CHECK(ms.values == late.values);
  CHECK(ms.ref_start == 7);
  const auto [a, b] = fusion_coefficients(FusionStrategy::MusicAndSpeech, {1.0, 1.0});
  CHECK(a == 0.5);
  CHECK(b == 0.5);
}

TEST_CASE("misaligned bands are rejected") {
  CHECK_THROWS_WITH_AS(fuse(vec(0, {1, 2}), vec(1, {1, 2}), FusionStrategy::Late, {}), "band desynchronization",
                       DataError);
  CHECK_THROWS_AS(fuse(vec(0, {1, 2}), vec(0, {1, 2, 3}), FusionStrategy::Late, {}), DataError);
}

TEST_CASE("coefficient identities over random weights") {
  oracle::Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const FusionWeights w{rng.uniform(), rng.uniform()};
    for (auto s : {FusionStrategy::Late, FusionStrategy::Speech, FusionStrategy::Music, FusionStrategy::MusicAndSpeech}) {
      const auto [a, b] = fusion_coefficients(s, w);
      REQUIRE(std::abs(a + b - 1.0) <= 1e-12);
      REQUIRE(a >= 0.0);
      REQUIRE(b >= 0.0);
      REQUIRE(a <= 1.0);
      REQUIRE(b <= 1.0);
    }
    const double ms_a = 0.5 * (w.music + 1.0 - w.speech), ms_b = 0.5 * (1.0 - w.music + w.speech);
    const auto [a, b] = fusion_coefficients(FusionStrategy::MusicAndSpeech, w);
    REQUIRE(a == doctest::Approx(ms_a).epsilon(1e-12));
    REQUIRE(b == doctest::Approx(ms_b).epsilon(1e-12));
  }
}

TEST_CASE("shared argmin survives every strategy and fusion is homogeneous") {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(20);
    const std::size_t at = rng.index(n);
    std::vector<double> m(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = rng.uniform(1.0, 10.0);
      s[i] = rng.uniform(1.0, 10.0);
    }
    m[at] = 0.5;
    s[at] = 0.25;
    const auto gm = vec(3, m), gs = vec(3, s);
    const FusionWeights w{rng.uniform(), rng.uniform()};
    const double c = rng.uniform(0.01, 100.0);
    auto scaled = [c](CumulativeDistanceVector g) {
      for (auto& x : g.values) x *= c;
      return g;
    };
    for (auto st : {FusionStrategy::Late, FusionStrategy::Speech, FusionStrategy::Music, FusionStrategy::MusicAndSpeech}) {
      const auto f = fuse(gm, gs, st, w);
      REQUIRE(f.argmin() == at);
      const auto fc = fuse(scaled(gm), scaled(gs), st, w);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(fc.values[i] == doctest::Approx(c * f.values[i]).epsilon(1e-12));
      REQUIRE(fc.argmin() == f.argmin());
    }
  }
}

TEST_CASE("speech fusion with zero speech probability reduces to the music tracker") {
  oracle::Rng rng(6);
  const auto music_ref = random_walk(400, 10, rng);
  const auto speech_ref = random_walk(400, 6, rng);
  const FeatureMatrix music_tgt = warped(*music_ref, 0.8, 450);
  const FeatureMatrix speech_tgt = warped(*speech_ref, 1.2, 450);
  OltwParams params;
  params.band_width_frames = 100;
  for (auto mode : {WeightMode::ConstantMean, WeightMode::LinearWeighted}) {
    DualTracker dual(music_ref, speech_ref, params, FusionStrategy::Speech, mode);
    for (std::size_t t = 0; t < music_tgt.rows(); ++t) dual.step(music_tgt.row(t), speech_tgt.row(t), 1.0, 0.0);
    CHECK(dual.path() == track_online(*music_ref, music_tgt, params));
  }
}

TEST_CASE("late fusion of identical feature sets equals a single tracker") {
  oracle::Rng rng(7);
  const auto ref = random_walk(500, 8, rng);
  const FeatureMatrix tgt = warped(*ref, 1.3, 300);
  OltwParams params;
  params.band_width_frames = 80;
  DualTracker dual(ref, ref, params, FusionStrategy::Late, WeightMode::ConstantMean);
  for (std::size_t t = 0; t < tgt.rows(); ++t) dual.step(tgt.row(t), tgt.row(t), rng.uniform(), rng.uniform());
  CHECK(dual.path() == track_online(*ref, tgt, params));
}

TEST_CASE("dual tracker keeps both bands in lockstep and stays monotone") {
  oracle::Rng rng(8);
  const auto music_ref = random_walk(600, 10, rng);
  const auto speech_ref = random_walk(550, 5, rng);
  const FeatureMatrix music_tgt = warped(*music_ref, 0.9, 500);
  const FeatureMatrix speech_tgt = warped(*speech_ref, 0.9, 500);
  OltwParams params;
  params.band_width_frames = 60;
  params.normalize_distances = true;
  DualTracker dual(music_ref, speech_ref, params, FusionStrategy::MusicAndSpeech, WeightMode::LinearWeighted);
  std::size_t prev = 0;
  for (std::size_t t = 0; t < music_tgt.rows(); ++t) {
    const auto step = dual.step(music_tgt.row(t), speech_tgt.row(t), rng.uniform(), rng.uniform());
    REQUIRE(step.hypothesis >= prev);
    REQUIRE(step.hypothesis < 550);
    prev = step.hypothesis;
    REQUIRE(dual.music_tracker().position() == dual.speech_tracker().position());
    REQUIRE(dual.music_tracker().cost_band().ref_start == dual.speech_tracker().cost_band().ref_start);
    REQUIRE(dual.music_tracker().cost_band().values.size() == dual.speech_tracker().cost_band().values.size());
    REQUIRE(step.weights.music >= 0.0);
    REQUIRE(step.weights.music <= 1.0);
    REQUIRE(step.weights.speech >= 0.0);
    REQUIRE(step.weights.speech <= 1.0);
  }
}

TEST_CASE("probabilities are consumed on even hops only") {
  oracle::Rng rng(9);
  const auto ref = random_walk(100, 4, rng);
  DualTracker dual(ref, ref, OltwParams{}, FusionStrategy::Speech, WeightMode::ConstantMean);
  dual.step(ref->row(0), ref->row(0), 0.0, 1.0);
  CHECK(dual.weights().speech == 1.0);
  dual.step(ref->row(1), ref->row(1), 0.0, 0.0);  // odd hop: ignored
  CHECK(dual.weights().speech == 1.0);
  dual.step(ref->row(2), ref->row(2), 0.0, 0.0);
  CHECK(dual.weights().speech == doctest::Approx(0.5));
}
