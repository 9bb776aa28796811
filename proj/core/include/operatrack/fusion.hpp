#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <span>
#include <string_view>

#include "operatrack/oltw.hpp"

namespace operatrack {

enum class FusionStrategy { Late, Speech, Music, MusicAndSpeech };
enum class WeightMode { ConstantMean, LinearWeighted };

std::string_view to_string(FusionStrategy s);   // late | speech | music | ms
std::string_view to_string(WeightMode m);       // constant | weighted
FusionStrategy parse_fusion_strategy(std::string_view text);
WeightMode parse_weight_mode(std::string_view text);

/// Smooths a stream of classifier probabilities into a fusion weight in [0, 1].
/// ConstantMean averages the last 25 entries (500 ms at 20 ms); LinearWeighted uses the last
/// 50 entries (1 s) with coefficients rising linearly from 1/n (oldest) to 1 (newest).
class WeightEstimator {
 public:
  static constexpr std::size_t kConstantCapacity = 25;
  static constexpr std::size_t kWeightedCapacity = 50;

  explicit WeightEstimator(WeightMode mode);

  struct Update {
    double weight;
    bool clamped;  // input probability was outside [0, 1]
  };

  Update update(double probability);
  /// Weight over the current history (0 when empty).
  double weight() const;

  WeightMode mode() const { return mode_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return history_.size(); }

 private:
  WeightMode mode_;
  std::size_t capacity_;
  std::deque<double> history_;
};

struct FusionWeights {
  double music = 0.0;   // w_m
  double speech = 0.0;  // w_s
};

/// Coefficients (a, b) such that the fused vector is a * gamma_m + b * gamma_s.
std::pair<double, double> fusion_coefficients(FusionStrategy strategy, FusionWeights w);

/// Throws DataError("band desynchronization") when the vectors do not cover the same band.
CumulativeDistanceVector fuse(const CumulativeDistanceVector& gamma_music,
                              const CumulativeDistanceVector& gamma_speech, FusionStrategy strategy,
                              FusionWeights w);

/// Two trackers (music- and speech-sensitive features) advanced in lockstep on the fused
/// argmin. Both references are truncated to their common length.
class DualTracker {
 public:
  DualTracker(std::shared_ptr<const FeatureMatrix> music_reference,
              std::shared_ptr<const FeatureMatrix> speech_reference, const OltwParams& params,
              FusionStrategy strategy, WeightMode weight_mode);

  struct Step {
    std::size_t hypothesis;
    CumulativeDistanceVector fused;
    FusionWeights weights;
  };

  /// One 10 ms hop. Probabilities arrive at 20 ms and are expected to be held for two hops;
  /// the estimators consume them on even hops only.
  Step step(std::span<const float> music_frame, std::span<const float> speech_frame,
            double p_music, double p_speech);

  std::size_t position() const { return music_.position(); }
  const AlignmentPath& path() const { return music_.path(); }
  const OnlineTimeWarper& music_tracker() const { return music_; }
  const OnlineTimeWarper& speech_tracker() const { return speech_; }
  FusionWeights weights() const { return weights_; }
  FusionStrategy strategy() const { return strategy_; }

 private:
  OnlineTimeWarper music_;
  OnlineTimeWarper speech_;
  FusionStrategy strategy_;
  WeightEstimator music_weight_;
  WeightEstimator speech_weight_;
  FusionWeights weights_;
  std::size_t hop_ = 0;
};

}  // namespace operatrack
