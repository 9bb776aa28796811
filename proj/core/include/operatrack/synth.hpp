#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "operatrack/audio_io.hpp"
#include "operatrack/classify.hpp"
#include "operatrack/eval.hpp"
#include "operatrack/oltw.hpp"

namespace operatrack {

/// Piecewise-linear, strictly increasing map from target time to reference time, anchored
/// at (0, 0). Beyond the last knot the final slope continues.
class WarpMap {
 public:
  static constexpr double kMinSlope = 0.5;
  static constexpr double kMaxSlope = 2.0;

  WarpMap() = default;
  /// Knot coordinates; the first knot must be (0, 0).
  WarpMap(std::vector<double> target_s, std::vector<double> ref_s);

  static WarpMap identity();
  /// Reference time advances `slope` seconds per target second.
  static WarpMap constant(double slope);

  double to_ref(double target_s) const;
  double to_target(double ref_s) const;
  std::span<const double> target_knots() const { return target_; }
  std::span<const double> ref_knots() const { return ref_; }
  std::vector<double> slopes() const;

  /// Throws ConfigError("invalid warp") unless knots are strictly increasing, start at the
  /// origin and every slope lies in [kMinSlope, kMaxSlope].
  void validate() const;

  friend bool operator==(const WarpMap&, const WarpMap&) = default;

 private:
  std::vector<double> target_ = {0.0, 1.0};
  std::vector<double> ref_ = {0.0, 1.0};
};

enum class SegmentKind { MusicLike, SpeechLike };

struct PlannedSegment {
  SegmentKind kind;
  double length_s;
  friend bool operator==(const PlannedSegment&, const PlannedSegment&) = default;
};

struct SynthSpec {
  double duration_s = 60.0;  // reference duration; segment lengths must sum to it
  std::vector<PlannedSegment> segments;
  WarpMap warp;
  double noise_snr_db = 20.0;  // +inf disables target and reference noise
  /// Scales the rendition differences of the target (speech pitch, formants, harmonic
  /// rolloff, vibrato). 0 renders the target with the reference's parameters.
  double timbre_perturbation = 1.0;
  std::uint64_t seed = 0;
  int sample_rate_hz = 44100;
  double bar_interval_s = 2.0;

  static constexpr double kNoNoise = std::numeric_limits<double>::infinity();

  void validate() const;

  /// Segment plan with 6-14 s segments whose speech share tracks `speech_fraction` (0.5
  /// alternates kinds), and a warp of 4-10 s pieces with log-uniform slopes in [0.5, 2].
  static SynthSpec random(double duration_s, std::uint64_t seed, double speech_fraction = 0.5);
};

struct SynthPair {
  SynthSpec spec;
  AudioBuffer reference;
  AudioBuffer target;
  std::vector<BarAnnotation> annotations;
  std::vector<LabeledSegment> labels;  // target timeline
};

SynthPair generate_pair(const SynthSpec& spec);

/// Renders one segment kind alone (reference rendition, no warp), for detector checks.
AudioBuffer render_segment(SegmentKind kind, double duration_s, std::uint64_t seed,
                           int sample_rate_hz = 44100);

/// Seed of pair `index` in a corpus generated from `corpus_seed`.
std::uint64_t pair_seed(std::uint64_t corpus_seed, std::size_t index);

struct DatasetEntry {
  std::string name;
  std::filesystem::path reference;
  std::filesystem::path target;
  std::filesystem::path annotations;
  std::filesystem::path labels;
  std::filesystem::path probabilities;
};

/// Writes `<dir>/<name>/{reference.wav, target.wav, annotations.csv, labels.csv,
/// probabilities.csv, warp.csv}` and returns the entry with absolute paths.
DatasetEntry write_pair(const std::filesystem::path& dir, const std::string& name, const SynthPair& pair);
/// "pair,reference,target,annotations,labels,probabilities" with paths relative to `dir`.
void write_manifest(const std::filesystem::path& dir, std::span<const DatasetEntry> entries);
std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dir);

/// Full DTW with the recurrence and tie order of OnlineTimeWarper, from (0, 0) to the last
/// frame of both sequences. Throws ConfigError on dimension mismatch, DataError on empty input.
AlignmentPath offline_dtw(const FeatureMatrix& reference, const FeatureMatrix& target,
                          Metric metric = Metric::Euclidean, StepWeights weights = {});

/// Accumulated cost of a path under the step rule: d(first) + sum of weight * d per step.
/// Throws DataError when consecutive points are not a unit step.
double path_cost(const FeatureMatrix& reference, const FeatureMatrix& target,
                 std::span<const PathPoint> points, Metric metric = Metric::Euclidean,
                 StepWeights weights = {});

}  // namespace operatrack
