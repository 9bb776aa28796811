#include <algorithm>
#include <cstdint>
#include <limits>

#include "operatrack/error.hpp"
#include "operatrack/synth.hpp"

namespace operatrack {

namespace {
enum : std::uint8_t { kStart, kDiagonal, kVertical, kHorizontal };
}

AlignmentPath offline_dtw(const FeatureMatrix& reference, const FeatureMatrix& target, Metric metric,
                          StepWeights weights) {
  if (reference.empty() || target.empty()) throw DataError("offline_dtw: empty input");
  if (reference.dims() != target.dims()) throw ConfigError("offline_dtw: dimension mismatch");
  const std::size_t rows = target.rows();
  const std::size_t cols = reference.rows();
  std::vector<std::uint8_t> from(rows * cols);
  std::vector<double> prev(cols), cur(cols);

  for (std::size_t t = 0; t < rows; ++t) {
    const auto frame = target.row(t);
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = frame_distance(reference.row(j), frame, metric);
      if (t == 0 && j == 0) {
        cur[0] = d;
        from[0] = kStart;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      std::uint8_t step = kStart;
      if (t > 0 && j > 0) {
        best = prev[j - 1] + weights.diagonal * d;
        step = kDiagonal;
      }
      if (t > 0) {
        double c = prev[j] + weights.vertical * d;
        if (c < best) best = c, step = kVertical;
      }
      if (j > 0) {
        double c = cur[j - 1] + weights.horizontal * d;
        if (c < best) best = c, step = kHorizontal;
      }
      cur[j] = best;
      from[t * cols + j] = step;
    }
    std::swap(prev, cur);
  }

  AlignmentPath path;
  path.hop_ms = target.hop_ms();
  std::size_t t = rows - 1, j = cols - 1;
  for (;;) {
    path.points.push_back({t, j});
    std::uint8_t step = from[t * cols + j];
    if (step == kStart) break;
    if (step == kDiagonal) --t, --j;
    else if (step == kVertical) --t;
    else --j;
  }
  std::reverse(path.points.begin(), path.points.end());
  return path;
}

double path_cost(const FeatureMatrix& reference, const FeatureMatrix& target,
                 std::span<const PathPoint> points, Metric metric, StepWeights weights) {
  if (points.empty()) throw DataError("path_cost: empty path");
  auto d = [&](const PathPoint& p) {
    return frame_distance(reference.row(p.ref_frame), target.row(p.target_frame), metric);
  };
  double cost = d(points[0]);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& a = points[i - 1];
    const auto& b = points[i];
    const std::size_t dt = b.target_frame - a.target_frame;
    const std::size_t dj = b.ref_frame - a.ref_frame;
    if (b.target_frame < a.target_frame || b.ref_frame < a.ref_frame || dt > 1 || dj > 1 || dt + dj == 0)
      throw DataError("path_cost: not a unit step");
    const double w = dt && dj ? weights.diagonal : dt ? weights.vertical : weights.horizontal;
    cost += w * d(b);
  }
  return cost;
}

}  // namespace operatrack
