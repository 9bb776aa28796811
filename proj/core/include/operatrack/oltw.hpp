#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "operatrack/features.hpp"

namespace operatrack {

enum class Metric { Euclidean, Cosine };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

/// Euclidean: ||a - b||. Cosine: 1 - <a,b>/(|a||b|), 0 when either norm is 0.
/// Throws ConfigError on dimension mismatch.
double frame_distance(std::span<const float> a, std::span<const float> b, Metric metric);

struct StepWeights {
  double diagonal = 1.0;
  double horizontal = 1.0;  // reference advances, target stays
  double vertical = 1.0;    // target advances, reference stays

  friend bool operator==(const StepWeights&, const StepWeights&) = default;
};

struct OltwParams {
  std::size_t band_width_frames = 1000;
  std::size_t max_run_count = 3;
  Metric distance = Metric::Euclidean;
  StepWeights step_weights;
  bool normalize_distances = false;

  void validate() const;
  friend bool operator==(const OltwParams&, const OltwParams&) = default;
};

/// Cumulative costs of the current target frame against reference frames
/// [ref_start, ref_start + values.size()).
struct CumulativeDistanceVector {
  std::size_t ref_start = 0;
  std::vector<double> values;

  /// Index of the minimum, lowest index on ties.
  std::size_t argmin() const;
  std::size_t position() const { return ref_start + argmin(); }
};

struct PathPoint {
  std::size_t target_frame;
  std::size_t ref_frame;
  friend bool operator==(const PathPoint&, const PathPoint&) = default;
};

struct TimePoint {
  double target_s;
  double ref_s;
  friend bool operator==(const TimePoint&, const TimePoint&) = default;
};

struct AlignmentPath {
  double hop_ms = 10.0;
  std::vector<PathPoint> points;

  std::vector<TimePoint> times() const;
  friend bool operator==(const AlignmentPath&, const AlignmentPath&) = default;
};

/// "target_time_s,ref_time_s" per emitted hop, millisecond precision.
std::string path_csv(std::span<const TimePoint> path);
std::vector<TimePoint> parse_path_csv(std::string_view text);

enum class Direction { Row, Column, Both };

struct StepResult {
  std::size_t hypothesis;
  CumulativeDistanceVector gamma;
};

/// On-line time warping against a fixed reference. Each target frame adds one row of the
/// cost matrix over band_width_frames reference frames reaching half a band past the
/// current position; the new position is the argmin of the admissible part of that row
/// (never behind the previous position, at most max_run_count ahead).
///
/// Recurrence: D(t,j) = min(D(t-1,j-1) + wd*d, D(t-1,j) + wv*d, D(t,j-1) + wh*d), ties
/// resolved toward the diagonal, D(0,0) = d(0,0). Hypotheses compare D(t,j) / (t + j + 2).
/// The last admissible cell stands for every cell from there to the band end, so a match
/// further ahead pulls the position forward at full speed.
class OnlineTimeWarper {
 public:
  OnlineTimeWarper(std::shared_ptr<const FeatureMatrix> reference, const OltwParams& params);
  OnlineTimeWarper(FeatureMatrix reference, const OltwParams& params);

  /// Evaluates and commits one target frame.
  StepResult step(std::span<const float> target_frame);

  /// Computes the next row with the band anchored at position() without committing it.
  /// Returns the admissible slice [position(), position() + max_run_count] of normalized
  /// costs.
  CumulativeDistanceVector evaluate(std::span<const float> target_frame);
  /// Commits the row from the last evaluate(), moving to `hypothesis` (must lie in the
  /// returned slice).
  void commit(std::size_t hypothesis);

  std::size_t position() const { return position_; }
  /// Number of target frames consumed.
  std::size_t target_frames() const { return t_; }
  const AlignmentPath& path() const { return path_; }
  const OltwParams& params() const { return params_; }
  const FeatureMatrix& reference() const { return *reference_; }
  std::size_t reference_frames() const { return reference_->rows(); }

  /// Full cumulative cost row of the last committed frame.
  const CumulativeDistanceVector& cost_band() const { return row_; }
  /// Local distances of the last committed row, after normalization.
  std::span<const double> local_distances() const { return local_; }
  /// Mean of all raw local distances seen so far (1 before the first step).
  double distance_running_mean() const;

  Direction last_direction() const { return last_direction_; }
  std::size_t run_count() const { return run_count_; }

 private:
  std::shared_ptr<const FeatureMatrix> reference_;
  OltwParams params_;
  std::size_t t_ = 0;
  std::size_t position_ = 0;

  CumulativeDistanceVector row_;      // committed row t-1
  CumulativeDistanceVector pending_;  // row t after evaluate()
  std::vector<double> local_;
  std::vector<double> pending_local_;
  std::size_t pending_admissible_ = 0;
  bool has_pending_ = false;

  double distance_sum_ = 0.0;
  double distance_count_ = 0.0;
  double pending_sum_ = 0.0;
  double pending_count_ = 0.0;

  Direction last_direction_ = Direction::Both;
  std::size_t run_count_ = 0;
  AlignmentPath path_;
};

/// Runs a standalone tracker over every target row.
AlignmentPath track_online(const FeatureMatrix& reference, const FeatureMatrix& target,
                           const OltwParams& params);

}  // namespace operatrack
