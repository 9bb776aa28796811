#include "operatrack/oltw.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"

namespace operatrack {

std::string_view to_string(Metric metric) {
  return metric == Metric::Euclidean ? "euclidean" : "cosine";
}

Metric parse_metric(std::string_view text) {
  if (text == "euclidean") return Metric::Euclidean;
  if (text == "cosine") return Metric::Cosine;
  throw ConfigError("unknown distance metric '" + std::string(text) + "'");
}

namespace {

double squared_distance(const float* a, const float* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = static_cast<double>(a[i]) - b[i], d1 = static_cast<double>(a[i + 1]) - b[i + 1];
    const double d2 = static_cast<double>(a[i + 2]) - b[i + 2], d3 = static_cast<double>(a[i + 3]) - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

double frame_distance(std::span<const float> a, std::span<const float> b, Metric metric) {
  if (a.size() != b.size()) throw ConfigError("frame_distance: dimension mismatch");
  if (metric == Metric::Euclidean) return std::sqrt(squared_distance(a.data(), b.data(), a.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::max(0.0, 1.0 - dot / (std::sqrt(na) * std::sqrt(nb)));
}

void OltwParams::validate() const {
  if (band_width_frames < 2) throw ConfigError("band_width_frames must be >= 2");
  if (max_run_count < 1) throw ConfigError("max_run_count must be >= 1");
  if (band_width_frames <= max_run_count) throw ConfigError("band_width_frames must exceed max_run_count");
  const auto& w = step_weights;
  if (!(w.diagonal > 0.0) || !(w.horizontal > 0.0) || !(w.vertical > 0.0)) {
    throw ConfigError("step weights must be positive");
  }
}

std::size_t CumulativeDistanceVector::argmin() const {
  if (values.empty()) throw ConfigError("argmin of an empty cumulative distance vector");
  return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
}

std::vector<TimePoint> AlignmentPath::times() const {
  std::vector<TimePoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back({static_cast<double>(p.target_frame) * hop_ms / 1000.0,
                   static_cast<double>(p.ref_frame) * hop_ms / 1000.0});
  }
  return out;
}

std::string path_csv(std::span<const TimePoint> path) {
  std::string out = "target_time_s,ref_time_s\n";
  for (const auto& p : path) out += format_fixed(p.target_s, 3) + ',' + format_fixed(p.ref_s, 3) + '\n';
  return out;
}

std::vector<TimePoint> parse_path_csv(std::string_view text) {
  const CsvTable table = parse_csv(text, {"target_time_s", "ref_time_s"});
  std::vector<TimePoint> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    out.push_back({parse_double(row[0], "target_time_s"), parse_double(row[1], "ref_time_s")});
  }
  return out;
}

OnlineTimeWarper::OnlineTimeWarper(std::shared_ptr<const FeatureMatrix> reference, const OltwParams& params)
    : reference_(std::move(reference)), params_(params) {
  if (!reference_ || reference_->rows() == 0) throw ConfigError("OLTW needs a non-empty reference");
  params_.validate();
  path_.hop_ms = reference_->hop_ms();
}

OnlineTimeWarper::OnlineTimeWarper(FeatureMatrix reference, const OltwParams& params)
    : OnlineTimeWarper(std::make_shared<const FeatureMatrix>(std::move(reference)), params) {}

double OnlineTimeWarper::distance_running_mean() const {
  return distance_count_ > 0.0 ? distance_sum_ / distance_count_ : 1.0;
}

CumulativeDistanceVector OnlineTimeWarper::evaluate(std::span<const float> frame) {
  const FeatureMatrix& ref = *reference_;
  if (frame.size() != ref.dims()) throw ConfigError("OLTW: target frame dimension does not match reference");

  const std::size_t n = ref.rows();
  const std::size_t ahead = std::max(params_.max_run_count, params_.band_width_frames / 2);
  const std::size_t hi = std::min(n, position_ + ahead + 1);
  const std::size_t lo = hi > params_.band_width_frames ? hi - params_.band_width_frames : 0;
  const std::size_t width = hi - lo;

  pending_local_.resize(width);
  pending_sum_ = 0.0;
  for (std::size_t j = lo; j < hi; ++j) {
    const double d = frame_distance(frame, ref.row(j), params_.distance);
    pending_local_[j - lo] = d;
    pending_sum_ += d;
  }
  pending_count_ = static_cast<double>(width);
  if (params_.normalize_distances) {
    const double mean = (distance_sum_ + pending_sum_) / (distance_count_ + pending_count_);
    if (mean > 0.0) {
      for (double& d : pending_local_) d /= mean;
    }
  }

  const StepWeights& w = params_.step_weights;
  constexpr double inf = std::numeric_limits<double>::infinity();
  pending_.ref_start = lo;
  pending_.values.assign(width, inf);
  auto& row = pending_.values;
  if (t_ == 0) {
    // Paths start at (0, 0).
    for (std::size_t j = lo; j < hi; ++j) {
      const double d = pending_local_[j - lo];
      row[j - lo] = j == 0 ? d : row[j - lo - 1] + w.horizontal * d;
    }
  } else {
    const std::size_t plo = row_.ref_start;
    const std::size_t phi = plo + row_.values.size();
    auto in_prev = [&](std::size_t j) { return j >= plo && j < phi; };
    for (std::size_t j = lo; j < hi; ++j) {
      const double d = pending_local_[j - lo];
      double best = inf;
      if (j > 0 && in_prev(j - 1)) best = row_.values[j - 1 - plo] + w.diagonal * d;
      if (in_prev(j)) best = std::min(best, row_.values[j - plo] + w.vertical * d);
      if (j > lo) best = std::min(best, row[j - lo - 1] + w.horizontal * d);
      row[j - lo] = best;
    }
  }
  has_pending_ = true;
  pending_admissible_ = position_;

  auto normalized = [&](std::size_t j) { return row[j - lo] / static_cast<double>(t_ + j + 2); };
  const std::size_t last = std::min(hi, position_ + params_.max_run_count + 1) - 1;
  CumulativeDistanceVector slice;
  slice.ref_start = position_;
  slice.values.reserve(last - position_ + 1);
  for (std::size_t j = position_; j < last; ++j) slice.values.push_back(normalized(j));
  double beyond = normalized(last);
  for (std::size_t j = last + 1; j < hi; ++j) beyond = std::min(beyond, normalized(j));
  slice.values.push_back(beyond);
  return slice;
}

void OnlineTimeWarper::commit(std::size_t hypothesis) {
  if (!has_pending_) throw ConfigError("OLTW commit without a pending row");
  const std::size_t hi = std::min(pending_.ref_start + pending_.values.size(),
                                  position_ + params_.max_run_count + 1);
  if (hypothesis < pending_admissible_ || hypothesis >= hi) {
    throw ConfigError("OLTW commit: hypothesis outside the admissible band");
  }
  const std::size_t advance = hypothesis - position_;
  const Direction dir = advance == 0 ? Direction::Row : advance == 1 ? Direction::Both : Direction::Column;
  run_count_ = (t_ > 0 && dir == last_direction_) ? run_count_ + 1 : 1;
  last_direction_ = dir;

  position_ = hypothesis;
  std::swap(row_, pending_);
  std::swap(local_, pending_local_);
  distance_sum_ += pending_sum_;
  distance_count_ += pending_count_;
  path_.points.push_back({t_, hypothesis});
  ++t_;
  has_pending_ = false;
}

StepResult OnlineTimeWarper::step(std::span<const float> frame) {
  CumulativeDistanceVector gamma = evaluate(frame);
  const std::size_t h = gamma.position();
  commit(h);
  return {h, std::move(gamma)};
}

AlignmentPath track_online(const FeatureMatrix& reference, const FeatureMatrix& target,
                           const OltwParams& params) {
  OnlineTimeWarper tracker(std::make_shared<const FeatureMatrix>(reference), params);
  for (std::size_t t = 0; t < target.rows(); ++t) tracker.step(target.row(t));
  return tracker.path();
}

}  // namespace operatrack
