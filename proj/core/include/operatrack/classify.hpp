#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "operatrack/audio_io.hpp"

namespace operatrack {

struct ClassProbabilities {
  double music = 0.0;
  double speech = 0.0;
  friend bool operator==(const ClassProbabilities&, const ClassProbabilities&) = default;
};

/// Classifier output on a fixed 20 ms grid; entry k describes time k * 20 ms.
struct ProbabilityStream {
  static constexpr double kRateMs = 20.0;

  std::vector<ClassProbabilities> entries;
  std::size_t clamped_values = 0;  // count of out-of-range values clamped on load

  std::size_t size() const { return entries.size(); }
  /// Probabilities for a 10 ms tracker hop: each entry is held for two hops, the last
  /// entry is held past the end. Empty streams yield zeros.
  ClassProbabilities at_hop(std::size_t hop) const;

  friend bool operator==(const ProbabilityStream& a, const ProbabilityStream& b) {
    return a.entries == b.entries;
  }
};

/// Grid time of entry k, computed as k * 20 / 1000 so it round-trips through text.
double probability_time_s(std::size_t k);

/// Parses `time_s,p_music,p_speech` (strictly increasing times) and holds values onto
/// the 20 ms grid up to the last row's time. Out-of-range values are clamped and counted.
ProbabilityStream parse_probability_csv(std::string_view text);
ProbabilityStream load_probability_stream(const std::filesystem::path& path);
/// One row per grid entry; values written with round-trip precision.
std::string probability_csv(const ProbabilityStream& stream);

enum class SegmentClass { Music, Speech };

std::string_view to_string(SegmentClass c);
SegmentClass parse_segment_class(std::string_view text);

struct LabeledSegment {
  SegmentClass label;
  double start_s;
  double end_s;
  friend bool operator==(const LabeledSegment&, const LabeledSegment&) = default;
};

/// "start_s,end_s,label" with label music|speech.
std::string labels_csv(std::span<const LabeledSegment> segments);
std::vector<LabeledSegment> parse_labels_csv(std::string_view text);

/// Indicator probabilities: 1 inside a segment of the class (closed interval), 0 elsewhere.
/// At a shared boundary the later segment wins. Length ceil(duration / 20 ms).
/// Throws DataError on overlapping segments or segments outside [0, duration].
ProbabilityStream oracle_stream_from_labels(std::span<const LabeledSegment> segments, double duration_s);

/// Fixed-constant music/speech detector used when no probability file is given.
/// Over the last second of 20 ms block energies it scores the share of 2-8 Hz energy in the
/// modulation spectrum of the energy envelope plus the fraction of blocks below half the
/// mean energy. Speech (syllable rate, pauses) scores high, sustained music low.
/// p_speech = gate * logistic(score), p_music = gate * (1 - logistic(score)); the loudness
/// gate keeps silence below 0.5 for both.
ProbabilityStream heuristic_probabilities(const AudioBuffer& audio);

/// Constants of heuristic_probabilities.
struct HeuristicConstants {
  static constexpr double kAnalysisRateHz = 8000.0;
  static constexpr double kModulationWeight = 0.5;
  static constexpr double kScoreSlope = 15.0;
  static constexpr double kScoreCenter = 0.72;
  static constexpr double kLevelCenterDb = -50.0;
  static constexpr double kLevelSlope = 0.5;
};

}  // namespace operatrack
