#include <doctest.h>

#include <cmath>

#include "operatrack/classify.hpp"
#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"
#include "operatrack/synth.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace operatrack;

namespace {

ClassProbabilities mean_of(const ProbabilityStream& s) {
  ClassProbabilities m;
  for (const auto& e : s.entries) {
    m.music += e.music;
    m.speech += e.speech;
  }
  m.music /= static_cast<double>(s.size());
  m.speech /= static_cast<double>(s.size());
  return m;
}

void check_in_range(const ProbabilityStream& s) {
  for (const auto& e : s.entries) {
    REQUIRE(e.music >= 0.0);
    REQUIRE(e.music <= 1.0);
    REQUIRE(e.speech >= 0.0);
    REQUIRE(e.speech <= 1.0);
  }
}

}  // namespace

TEST_CASE("a two-row file holds a constant stream over its span") {
  const auto s = parse_probability_csv("time_s,p_music,p_speech\n0.0,1,0\n10.0,1,0\n");
  CHECK(s.size() == 501);
  for (const auto& e : s.entries) CHECK(e == ClassProbabilities{1.0, 0.0});
  CHECK(s.clamped_values == 0);
}

TEST_CASE("values between rows are held from the most recent row") {
  const auto s = parse_probability_csv("time_s,p_music,p_speech\n0,0.2,0.1\n0.05,0.9,0.3\n0.1,0,1\n");
  REQUIRE(s.size() == 6);
  CHECK(s.entries[0].music == 0.2);
  CHECK(s.entries[2].music == 0.2);  // 40 ms
  CHECK(s.entries[3].music == 0.9);  // 60 ms
  CHECK(s.entries[5].speech == 1.0);
}

TEST_CASE("out-of-range values clamp and are counted") {
  const auto s = parse_probability_csv("time_s,p_music,p_speech\n0,1.7,-0.2\n");
  REQUIRE(s.size() == 1);
  CHECK(s.entries[0] == ClassProbabilities{1.0, 0.0});
  CHECK(s.clamped_values == 2);
}

TEST_CASE("malformed probability files are data errors") {
  CHECK_THROWS_WITH_AS(parse_probability_csv(""), doctest::Contains("no probability entries"), DataError);
  CHECK_THROWS_WITH_AS(parse_probability_csv("time_s,p_music,p_speech\n"), "no probability entries", DataError);
  CHECK_THROWS_AS(parse_probability_csv("time_s,p_music,p_speech\n0,0,0\n0,1,1\n"), DataError);
  CHECK_THROWS_AS(parse_probability_csv("time_s,p_music,p_speech\n1,0,0\n0.5,1,1\n"), DataError);
  CHECK_THROWS_AS(parse_probability_csv("time_s,p_music,p_speech\n0,abc,0\n"), DataError);
  CHECK_THROWS_AS(parse_probability_csv("time_s,p_music\n0,0\n"), DataError);
  CHECK_THROWS_AS(parse_probability_csv("time_s,p_music,p_speech\n0,nan,0\n"), DataError);
}

TEST_CASE("tracker hops hold each entry for two hops") {
  ProbabilityStream s;
  s.entries = {{0.1, 0.2}, {0.3, 0.4}};
  CHECK(s.at_hop(0) == ClassProbabilities{0.1, 0.2});
  CHECK(s.at_hop(1) == ClassProbabilities{0.1, 0.2});
  CHECK(s.at_hop(2) == ClassProbabilities{0.3, 0.4});
  CHECK(s.at_hop(99) == ClassProbabilities{0.3, 0.4});
  CHECK(ProbabilityStream{}.at_hop(3) == ClassProbabilities{});
}

TEST_CASE("oracle streams from labels") {
  SUBCASE("a music segment covers its closed interval") {
    const std::vector<LabeledSegment> seg = {{SegmentClass::Music, 0.0, 5.0}};
    const auto s = oracle_stream_from_labels(seg, 10.0);
    REQUIRE(s.size() == 500);
    for (std::size_t k = 0; k < s.size(); ++k) {
      CHECK(s.entries[k].music == (k <= 250 ? 1.0 : 0.0));
      CHECK(s.entries[k].speech == 0.0);
    }
  }
  SUBCASE("no segments give silence") {
    const auto s = oracle_stream_from_labels({}, 3.0);
    CHECK(s.size() == 150);
    for (const auto& e : s.entries) CHECK(e == ClassProbabilities{});
  }
  SUBCASE("adjacent segments switch at the boundary frame") {
    const std::vector<LabeledSegment> seg = {{SegmentClass::Music, 0.0, 2.0}, {SegmentClass::Speech, 2.0, 4.0}};
    const auto s = oracle_stream_from_labels(seg, 4.0);
    CHECK(s.entries[99] == ClassProbabilities{1.0, 0.0});
    CHECK(s.entries[100] == ClassProbabilities{0.0, 1.0});
  }
  SUBCASE("lengths round up to whole entries") {
    CHECK(oracle_stream_from_labels({}, 0.031).size() == 2);
    CHECK(oracle_stream_from_labels({}, 0.04).size() == 2);
  }
  SUBCASE("invalid segments") {
    const std::vector<LabeledSegment> overlap = {{SegmentClass::Music, 0.0, 2.0}, {SegmentClass::Speech, 1.5, 4.0}};
    CHECK_THROWS_AS(oracle_stream_from_labels(overlap, 4.0), DataError);
    const std::vector<LabeledSegment> outside = {{SegmentClass::Music, 0.0, 5.0}};
    CHECK_THROWS_AS(oracle_stream_from_labels(outside, 4.0), DataError);
  }
}

TEST_CASE("oracle streams round-trip exactly through their text form") {
  oracle::Rng rng(1);
  TempDir dir("classify");
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<LabeledSegment> segs;
    double t = rng.uniform(0.0, 2.0);
    const double duration = 5.0 + rng.uniform(0.0, 40.0);
    while (true) {
      const double end = t + rng.uniform(0.05, 6.0);
      if (end > duration) break;
      segs.push_back({rng.uniform() < 0.5 ? SegmentClass::Music : SegmentClass::Speech, t, end});
      t = end + (rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.0, 1.0));
    }
    const auto s = oracle_stream_from_labels(segs, duration);
    check_in_range(s);
    const std::string text = probability_csv(s);
    const auto path = dir / "p.csv";
    write_text_file(path, text);
    const auto back = load_probability_stream(path);
    CHECK(back == s);
    CHECK(probability_csv(back) == text);
    CHECK(parse_labels_csv(labels_csv(segs)) == segs);
  }
}

TEST_CASE("heuristic favours music on the music-like generator") {
  const AudioBuffer music = render_segment(SegmentKind::MusicLike, 10.0, 11);
  const auto s = heuristic_probabilities(music);
  CHECK(s.size() == 500);
  check_in_range(s);
  const auto m = mean_of(s);
  CHECK(m.music > m.speech);
}

TEST_CASE("heuristic favours speech on the speech-like generator") {
  const AudioBuffer speech = render_segment(SegmentKind::SpeechLike, 10.0, 12);
  const auto s = heuristic_probabilities(speech);
  check_in_range(s);
  const auto m = mean_of(s);
  CHECK(m.speech > m.music);
}

TEST_CASE("heuristic keeps silence below one half") {
  const AudioBuffer silence(std::vector<double>(44100 * 3, 0.0), 44100);
  const auto s = heuristic_probabilities(silence);
  CHECK(s.size() == 150);
  for (const auto& e : s.entries) {
    CHECK(e.music < 0.5);
    CHECK(e.speech < 0.5);
  }
}

TEST_CASE("heuristic output length and range over random audio") {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const int sr = trial % 2 ? 8000 : 22050;
    const std::size_t n = 1 + rng.index(static_cast<std::size_t>(sr) * 3);
    const AudioBuffer a(rng.vector(n, -rng.uniform(), rng.uniform()), sr);
    const auto s = heuristic_probabilities(a);
    CHECK(s.size() == static_cast<std::size_t>(std::ceil(static_cast<double>(n) / sr / 0.02 - 1e-9)));
    check_in_range(s);
  }
}
