#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"
#include "operatrack/synth.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace operatrack;

namespace {

SynthSpec plain_spec(double duration_s, std::uint64_t seed) {
  SynthSpec s;
  s.duration_s = duration_s;
  s.segments = {{SegmentKind::MusicLike, duration_s / 2}, {SegmentKind::SpeechLike, duration_s / 2}};
  s.seed = seed;
  s.sample_rate_hz = 16000;
  return s;
}

}  // namespace

TEST_CASE("warp maps interpolate and invert") {
  const WarpMap w({0.0, 4.0, 10.0}, {0.0, 2.0, 14.0});
  CHECK(w.to_ref(2.0) == doctest::Approx(1.0));
  CHECK(w.to_ref(7.0) == doctest::Approx(8.0));
  CHECK(w.to_ref(12.0) == doctest::Approx(18.0));  // final slope continues
  CHECK(w.slopes() == std::vector<double>{0.5, 2.0});
  CHECK_NOTHROW(w.validate());

  oracle::Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double t = rng.uniform(0.0, 20.0);
    CHECK(w.to_target(w.to_ref(t)) == doctest::Approx(t).epsilon(1e-12));
  }
  CHECK(WarpMap::identity().to_ref(3.5) == 3.5);
  CHECK(WarpMap::constant(2.0).to_ref(3.0) == doctest::Approx(6.0));
}

TEST_CASE("invalid warps are rejected") {
  CHECK_THROWS_WITH_AS(WarpMap({0.0, 1.0}, {0.0, 3.0}), doctest::Contains("invalid warp"), ConfigError);
  CHECK_THROWS_AS(WarpMap({0.0, 1.0}, {0.0, 0.4}), ConfigError);
  CHECK_THROWS_AS(WarpMap({0.0, 1.0, 1.0}, {0.0, 1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(WarpMap({1.0, 2.0}, {1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(WarpMap::constant(2.5), ConfigError);
}

TEST_CASE("random specs respect their declared bounds") {
  for (std::size_t i = 0; i < 40; ++i) {
    const double fraction = static_cast<double>(i % 5) / 4.0;
    const SynthSpec s = SynthSpec::random(60.0, pair_seed(9, i), fraction);
    CHECK_NOTHROW(s.validate());
    double total = 0.0, speech = 0.0;
    for (const auto& seg : s.segments) {
      total += seg.length_s;
      if (seg.kind == SegmentKind::SpeechLike) speech += seg.length_s;
    }
    CHECK(total == doctest::Approx(60.0));
    if (fraction == 0.0) CHECK(speech == 0.0);
    if (fraction == 1.0) CHECK(speech == doctest::Approx(60.0));
    for (double slope : s.warp.slopes()) {
      CHECK(slope >= WarpMap::kMinSlope);
      CHECK(slope <= WarpMap::kMaxSlope);
    }
    const auto knots = s.warp.ref_knots();
    CHECK(knots.back() >= 60.0);
  }
}

TEST_CASE("identity warp without noise or timbre change renders the reference twice") {
  SynthSpec s = plain_spec(4.0, 5);
  s.noise_snr_db = SynthSpec::kNoNoise;
  s.timbre_perturbation = 0.0;
  const SynthPair p = generate_pair(s);
  CHECK(p.target == p.reference);
}

TEST_CASE("a constant slope of two halves the target duration") {
  SynthSpec s = plain_spec(8.0, 6);
  s.warp = WarpMap::constant(2.0);
  const SynthPair p = generate_pair(s);
  CHECK(std::abs(p.target.duration_s() - 4.0) <= 0.01);
  CHECK(std::abs(p.reference.duration_s() - 8.0) <= 0.01);
}

TEST_CASE("the same seed gives bit-identical pairs") {
  const SynthSpec s = SynthSpec::random(10.0, 77);
  const SynthPair a = generate_pair(s), b = generate_pair(s);
  CHECK(a.reference == b.reference);
  CHECK(a.target == b.target);
  CHECK(a.annotations == b.annotations);
  CHECK(a.labels == b.labels);
  const SynthPair c = generate_pair(SynthSpec::random(10.0, 78));
  CHECK_FALSE(c.target == a.target);
}

TEST_CASE("annotations follow the warp onto the two-second reference grid") {
  for (std::size_t i = 0; i < 5; ++i) {
    const SynthSpec s = SynthSpec::random(30.0, pair_seed(4, i));
    const SynthPair p = generate_pair(s);
    REQUIRE(p.annotations.size() == 14);
    CHECK_NOTHROW(validate_annotations(p.annotations));
    const double one_sample = 1.0 / s.sample_rate_hz;
    for (std::size_t b = 0; b < p.annotations.size(); ++b) {
      const auto& bar = p.annotations[b];
      CHECK(bar.bar_id == static_cast<long long>(b + 1));
      CHECK(std::abs(bar.ref_time_s - 2.0 * static_cast<double>(b + 1)) <= one_sample);
      CHECK(std::abs(s.warp.to_ref(bar.target_time_s) - bar.ref_time_s) <= one_sample);
    }
    // Labels tile the target timeline in segment order.
    REQUIRE(p.labels.size() == s.segments.size());
    CHECK(p.labels.front().start_s == 0.0);
    for (std::size_t k = 1; k < p.labels.size(); ++k) CHECK(p.labels[k].start_s == p.labels[k - 1].end_s);
    CHECK(std::abs(p.labels.back().end_s - p.target.duration_s()) <= one_sample);
  }
}

TEST_CASE("noise level follows the requested SNR") {
  SynthSpec clean = plain_spec(4.0, 8);
  clean.noise_snr_db = SynthSpec::kNoNoise;
  SynthSpec noisy = clean;
  noisy.noise_snr_db = 10.0;
  const SynthPair a = generate_pair(clean), b = generate_pair(noisy);
  REQUIRE(a.reference.size() == b.reference.size());
  std::vector<double> diff(a.reference.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = b.reference.samples()[i] - a.reference.samples()[i];
  const double snr = 20.0 * std::log10(oracle::rms(a.reference.samples()) / oracle::rms(diff));
  CHECK(std::abs(snr - 10.0) <= 1.0);
}

TEST_CASE("rendered segments are deterministic and audible") {
  for (auto kind : {SegmentKind::MusicLike, SegmentKind::SpeechLike}) {
    const AudioBuffer a = render_segment(kind, 2.0, 3, 16000);
    CHECK(a.size() == 32000);
    CHECK(a == render_segment(kind, 2.0, 3, 16000));
    CHECK(oracle::rms(a.samples()) > 0.01);
  }
}

TEST_CASE("pair seeds are distinct across indices and corpora") {
  std::vector<std::uint64_t> seen;
  for (std::uint64_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 50; ++i) seen.push_back(pair_seed(c, i));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("dataset directories round-trip through the manifest") {
  TempDir dir("synth");
  std::vector<DatasetEntry> entries;
  std::vector<SynthPair> pairs;
  for (std::size_t i = 0; i < 2; ++i) {
    pairs.push_back(generate_pair(SynthSpec::random(6.0, pair_seed(2, i))));
    entries.push_back(write_pair(dir.path(), "pair_" + std::to_string(i), pairs.back()));
  }
  write_manifest(dir.path(), entries);
  const auto back = read_manifest(dir.path());
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].name == entries[i].name);
    CHECK(std::filesystem::equivalent(back[i].target, entries[i].target));
    CHECK(load_annotations(back[i].annotations) == pairs[i].annotations);
    CHECK(parse_labels_csv(read_text_file(back[i].labels)) == pairs[i].labels);
    const AudioBuffer ref = load_audio(back[i].reference);
    CHECK(ref.size() == pairs[i].reference.size());
    CHECK(ref.sample_rate_hz() == pairs[i].reference.sample_rate_hz());
    const auto probs = load_probability_stream(back[i].probabilities);
    CHECK(probs == oracle_stream_from_labels(pairs[i].labels, pairs[i].target.duration_s()));
  }
  CHECK_THROWS_AS(read_manifest(dir / "nowhere"), DataError);
}
