#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "operatrack/classify.hpp"
#include "operatrack/eval.hpp"
#include "operatrack/features.hpp"
#include "operatrack/fusion.hpp"
#include "operatrack/oltw.hpp"

namespace operatrack {

enum class TrackingStrategy {
  SingleMusic,
  SingleSpeech,
  Late,
  SpeechConstant,
  SpeechWeighted,
  MusicConstant,
  MusicWeighted,
  MsConstant,
  MsWeighted,
};

/// single-music | single-speech | late | speech-constant | ... | ms-weighted
std::string_view to_string(TrackingStrategy s);
TrackingStrategy parse_tracking_strategy(std::string_view text);
std::span<const TrackingStrategy> all_tracking_strategies();

bool is_fused(TrackingStrategy s);
/// Fusion rule and weight mode of a fused strategy (Late uses ConstantMean, unused).
FusionStrategy fusion_of(TrackingStrategy s);
WeightMode weight_mode_of(TrackingStrategy s);

struct TrackerSetup {
  FeatureConfig music = FeatureConfig::baseline();
  FeatureConfig speech = FeatureConfig::recitative();
  OltwParams params;
  /// Unset: normalize local distances for fused strategies only.
  std::optional<bool> normalize;

  OltwParams params_for(TrackingStrategy s) const;
};

/// Feature matrices of one reference/target pair for both trackers.
struct PairFeatures {
  std::shared_ptr<const FeatureMatrix> music_reference;
  std::shared_ptr<const FeatureMatrix> speech_reference;
  FeatureMatrix music_target;
  FeatureMatrix speech_target;
};

/// Extracts only the feature sets `strategies` need (both when empty).
PairFeatures extract_pair_features(const AudioBuffer& reference, const AudioBuffer& target,
                                   const TrackerSetup& setup,
                                   std::span<const TrackingStrategy> strategies = {});

/// Streams every target hop through the strategy's tracker(s). Fused strategies read
/// `probabilities` at hop / 2 (held past its end).
AlignmentPath run_strategy(const PairFeatures& features, TrackingStrategy strategy,
                           const TrackerSetup& setup, const ProbabilityStream& probabilities);

struct ComparisonItem {
  std::string name;
  AudioBuffer reference;
  AudioBuffer target;
  std::vector<BarAnnotation> annotations;
  ProbabilityStream probabilities;
};

struct StrategyResult {
  TrackingStrategy strategy;
  Metrics metrics;
};

/// Runs every strategy on every item, pooling bar errors per strategy. Result order follows
/// `strategies`.
std::vector<StrategyResult> compare_strategies(std::span<const ComparisonItem> items,
                                               const TrackerSetup& setup,
                                               std::span<const TrackingStrategy> strategies);

/// Rows: baseline (single-music), single-speech, then the seven fused strategies grouped by
/// fusion rule with a mean-type column. Means in milliseconds.
std::string comparison_table(std::span<const StrategyResult> results);
/// "strategy,mean_ms,pct_le_1s,pct_le_2s,pct_le_5s,max_error_s,n_bars,not_reached"
std::string comparison_csv(std::span<const StrategyResult> results);

}  // namespace operatrack
