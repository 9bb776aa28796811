#include "operatrack/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "operatrack/error.hpp"

namespace operatrack {

std::string_view to_string(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::Late: return "late";
    case FusionStrategy::Speech: return "speech";
    case FusionStrategy::Music: return "music";
    case FusionStrategy::MusicAndSpeech: return "ms";
  }
  return "?";
}

std::string_view to_string(WeightMode m) {
  return m == WeightMode::ConstantMean ? "constant" : "weighted";
}

FusionStrategy parse_fusion_strategy(std::string_view text) {
  if (text == "late") return FusionStrategy::Late;
  if (text == "speech") return FusionStrategy::Speech;
  if (text == "music") return FusionStrategy::Music;
  if (text == "ms") return FusionStrategy::MusicAndSpeech;
  throw ConfigError("unknown fusion strategy '" + std::string(text) + "' (expected late, speech, music or ms)");
}

WeightMode parse_weight_mode(std::string_view text) {
  if (text == "constant") return WeightMode::ConstantMean;
  if (text == "weighted") return WeightMode::LinearWeighted;
  throw ConfigError("unknown weight mode '" + std::string(text) + "' (expected constant or weighted)");
}

WeightEstimator::WeightEstimator(WeightMode mode)
    : mode_(mode), capacity_(mode == WeightMode::ConstantMean ? kConstantCapacity : kWeightedCapacity) {}

WeightEstimator::Update WeightEstimator::update(double p) {
  bool clamped = false;
  if (!std::isfinite(p)) {
    p = 0.0;
    clamped = true;
  } else if (p < 0.0 || p > 1.0) {
    p = std::clamp(p, 0.0, 1.0);
    clamped = true;
  }
  history_.push_back(p);
  if (history_.size() > capacity_) history_.pop_front();
  return {weight(), clamped};
}

double WeightEstimator::weight() const {
  const std::size_t n = history_.size();
  if (n == 0) return 0.0;
  double num = 0.0, den = 0.0;
  if (mode_ == WeightMode::ConstantMean) {
    for (double p : history_) num += p;
    den = static_cast<double>(n);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = static_cast<double>(i + 1) / static_cast<double>(n);
      num += a * history_[i];
      den += a;
    }
  }
  return std::clamp(num / den, 0.0, 1.0);
}

std::pair<double, double> fusion_coefficients(FusionStrategy strategy, FusionWeights w) {
  switch (strategy) {
    case FusionStrategy::Late: return {0.5, 0.5};
    case FusionStrategy::Speech: return {1.0 - w.speech, w.speech};
    case FusionStrategy::Music: return {w.music, 1.0 - w.music};
    case FusionStrategy::MusicAndSpeech:
      return {0.5 * (w.music + (1.0 - w.speech)), 0.5 * ((1.0 - w.music) + w.speech)};
  }
  return {0.5, 0.5};
}

CumulativeDistanceVector fuse(const CumulativeDistanceVector& gm, const CumulativeDistanceVector& gs,
                              FusionStrategy strategy, FusionWeights w) {
  if (gm.ref_start != gs.ref_start || gm.values.size() != gs.values.size()) {
    throw DataError("band desynchronization");
  }
  CumulativeDistanceVector out;
  out.ref_start = gm.ref_start;
  out.values.resize(gm.values.size());
  if (strategy == FusionStrategy::Late) {
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = (gm.values[i] + gs.values[i]) / 2.0;
    return out;
  }
  const auto [a, b] = fusion_coefficients(strategy, w);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a * gm.values[i] + b * gs.values[i];
  return out;
}

namespace {

std::shared_ptr<const FeatureMatrix> truncated(const std::shared_ptr<const FeatureMatrix>& m, std::size_t rows) {
  if (!m) throw ConfigError("DualTracker: null reference");
  if (m->rows() == rows) return m;
  return std::make_shared<const FeatureMatrix>(m->head(rows));
}

std::size_t common_rows(const std::shared_ptr<const FeatureMatrix>& a, const std::shared_ptr<const FeatureMatrix>& b) {
  if (!a || !b) throw ConfigError("DualTracker: null reference");
  return std::min(a->rows(), b->rows());
}

}  // namespace

DualTracker::DualTracker(std::shared_ptr<const FeatureMatrix> music_reference,
                         std::shared_ptr<const FeatureMatrix> speech_reference, const OltwParams& params,
                         FusionStrategy strategy, WeightMode weight_mode)
    : music_(truncated(music_reference, common_rows(music_reference, speech_reference)), params),
      speech_(truncated(speech_reference, common_rows(music_reference, speech_reference)), params),
      strategy_(strategy),
      music_weight_(weight_mode),
      speech_weight_(weight_mode) {}

DualTracker::Step DualTracker::step(std::span<const float> music_frame, std::span<const float> speech_frame,
                                    double p_music, double p_speech) {
  CumulativeDistanceVector gm = music_.evaluate(music_frame);
  CumulativeDistanceVector gs = speech_.evaluate(speech_frame);
  if (hop_ % 2 == 0) {
    weights_.music = music_weight_.update(p_music).weight;
    weights_.speech = speech_weight_.update(p_speech).weight;
  }
  ++hop_;
  CumulativeDistanceVector fused = fuse(gm, gs, strategy_, weights_);
  const std::size_t h = fused.position();
  music_.commit(h);
  speech_.commit(h);
  return {h, std::move(fused), weights_};
}

}  // namespace operatrack
