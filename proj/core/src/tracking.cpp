#include "operatrack/tracking.hpp"

#include <array>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"

namespace operatrack {

namespace {

constexpr std::array<TrackingStrategy, 9> kStrategies = {
    TrackingStrategy::SingleMusic,    TrackingStrategy::SingleSpeech,  TrackingStrategy::Late,
    TrackingStrategy::SpeechConstant, TrackingStrategy::SpeechWeighted, TrackingStrategy::MusicConstant,
    TrackingStrategy::MusicWeighted,  TrackingStrategy::MsConstant,    TrackingStrategy::MsWeighted,
};

bool uses_music(TrackingStrategy s) { return s != TrackingStrategy::SingleSpeech; }
bool uses_speech(TrackingStrategy s) { return s != TrackingStrategy::SingleMusic; }

}  // namespace

std::string_view to_string(TrackingStrategy s) {
  switch (s) {
    case TrackingStrategy::SingleMusic: return "single-music";
    case TrackingStrategy::SingleSpeech: return "single-speech";
    case TrackingStrategy::Late: return "late";
    case TrackingStrategy::SpeechConstant: return "speech-constant";
    case TrackingStrategy::SpeechWeighted: return "speech-weighted";
    case TrackingStrategy::MusicConstant: return "music-constant";
    case TrackingStrategy::MusicWeighted: return "music-weighted";
    case TrackingStrategy::MsConstant: return "ms-constant";
    case TrackingStrategy::MsWeighted: return "ms-weighted";
  }
  return "?";
}

TrackingStrategy parse_tracking_strategy(std::string_view text) {
  for (TrackingStrategy s : kStrategies)
    if (to_string(s) == text) return s;
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

std::span<const TrackingStrategy> all_tracking_strategies() { return kStrategies; }

bool is_fused(TrackingStrategy s) {
  return s != TrackingStrategy::SingleMusic && s != TrackingStrategy::SingleSpeech;
}

FusionStrategy fusion_of(TrackingStrategy s) {
  switch (s) {
    case TrackingStrategy::SpeechConstant:
    case TrackingStrategy::SpeechWeighted: return FusionStrategy::Speech;
    case TrackingStrategy::MusicConstant:
    case TrackingStrategy::MusicWeighted: return FusionStrategy::Music;
    case TrackingStrategy::MsConstant:
    case TrackingStrategy::MsWeighted: return FusionStrategy::MusicAndSpeech;
    default: return FusionStrategy::Late;
  }
}

WeightMode weight_mode_of(TrackingStrategy s) {
  switch (s) {
    case TrackingStrategy::SpeechWeighted:
    case TrackingStrategy::MusicWeighted:
    case TrackingStrategy::MsWeighted: return WeightMode::LinearWeighted;
    default: return WeightMode::ConstantMean;
  }
}

OltwParams TrackerSetup::params_for(TrackingStrategy s) const {
  OltwParams p = params;
  p.normalize_distances = normalize.value_or(is_fused(s));
  return p;
}

PairFeatures extract_pair_features(const AudioBuffer& reference, const AudioBuffer& target,
                                   const TrackerSetup& setup, std::span<const TrackingStrategy> strategies) {
  bool music = strategies.empty(), speech = strategies.empty();
  for (TrackingStrategy s : strategies) {
    music = music || uses_music(s);
    speech = speech || uses_speech(s);
  }
  PairFeatures f;
  if (music) {
    FeatureExtractor ex(setup.music);
    f.music_reference = std::make_shared<const FeatureMatrix>(ex.extract(reference));
    f.music_target = ex.extract(target);
  }
  if (speech) {
    FeatureExtractor ex(setup.speech);
    f.speech_reference = std::make_shared<const FeatureMatrix>(ex.extract(reference));
    f.speech_target = ex.extract(target);
  }
  return f;
}

AlignmentPath run_strategy(const PairFeatures& features, TrackingStrategy strategy,
                           const TrackerSetup& setup, const ProbabilityStream& probabilities) {
  const OltwParams params = setup.params_for(strategy);
  if (strategy == TrackingStrategy::SingleMusic || strategy == TrackingStrategy::SingleSpeech) {
    const bool music = strategy == TrackingStrategy::SingleMusic;
    const auto& ref = music ? features.music_reference : features.speech_reference;
    const FeatureMatrix& tgt = music ? features.music_target : features.speech_target;
    if (!ref) throw ConfigError("features for " + std::string(to_string(strategy)) + " were not extracted");
    OnlineTimeWarper tracker(ref, params);
    for (std::size_t t = 0; t < tgt.rows(); ++t) tracker.step(tgt.row(t));
    return tracker.path();
  }

  if (!features.music_reference || !features.speech_reference)
    throw ConfigError("fused strategies need both feature sets");
  DualTracker dual(features.music_reference, features.speech_reference, params, fusion_of(strategy),
                   weight_mode_of(strategy));
  const std::size_t hops = std::min(features.music_target.rows(), features.speech_target.rows());
  for (std::size_t t = 0; t < hops; ++t) {
    const ClassProbabilities p = probabilities.at_hop(t);
    dual.step(features.music_target.row(t), features.speech_target.row(t), p.music, p.speech);
  }
  return dual.path();
}

std::vector<StrategyResult> compare_strategies(std::span<const ComparisonItem> items,
                                               const TrackerSetup& setup,
                                               std::span<const TrackingStrategy> strategies) {
  if (items.empty()) throw DataError("empty dataset");
  std::vector<std::vector<std::vector<BarError>>> errors(strategies.size());
  for (const auto& item : items) {
    const PairFeatures features = extract_pair_features(item.reference, item.target, setup, strategies);
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      const AlignmentPath path = run_strategy(features, strategies[i], setup, item.probabilities);
      errors[i].push_back(bar_errors(path.times(), item.annotations));
    }
  }
  std::vector<StrategyResult> out;
  for (std::size_t i = 0; i < strategies.size(); ++i)
    out.push_back({strategies[i], summarize_pooled(errors[i])});
  return out;
}

std::string comparison_table(std::span<const StrategyResult> results) {
  auto label = [](TrackingStrategy s) -> std::pair<std::string, std::string> {
    switch (s) {
      case TrackingStrategy::SingleMusic: return {"baseline", ""};
      case TrackingStrategy::SingleSpeech: return {"speech only", ""};
      case TrackingStrategy::Late: return {"Late Fusion", ""};
      case TrackingStrategy::SpeechConstant: return {"Speech Fusion", "constant"};
      case TrackingStrategy::SpeechWeighted: return {"Speech Fusion", "weighted"};
      case TrackingStrategy::MusicConstant: return {"Music Fusion", "constant"};
      case TrackingStrategy::MusicWeighted: return {"Music Fusion", "weighted"};
      case TrackingStrategy::MsConstant: return {"M&S Fusion", "constant"};
      case TrackingStrategy::MsWeighted: return {"M&S Fusion", "weighted"};
    }
    return {"?", ""};
  };
  std::vector<std::vector<std::string>> rows;
  std::string previous;
  for (const auto& r : results) {
    auto [name, mean_type] = label(r.strategy);
    const Metrics& m = r.metrics;
    rows.push_back({name == previous ? "" : name, mean_type,
                    format_fixed(m.mean_error_s * 1000.0, 0) + "ms", format_percent(m.pct_le_1s),
                    format_percent(m.pct_le_2s), format_percent(m.pct_le_5s)});
    previous = name;
  }
  return render_table({"Strategy", "mean type", "mean", "<=1s", "<=2s", "<=5s"}, rows);
}

std::string comparison_csv(std::span<const StrategyResult> results) {
  std::string out = "strategy,mean_ms,pct_le_1s,pct_le_2s,pct_le_5s,max_error_s,n_bars,not_reached\n";
  for (const auto& r : results) {
    const Metrics& m = r.metrics;
    out += std::string(to_string(r.strategy)) + ',' + format_fixed(m.mean_error_s * 1000.0, 1) + ',' +
           format_fixed(m.pct_le_1s, 2) + ',' + format_fixed(m.pct_le_2s, 2) + ',' +
           format_fixed(m.pct_le_5s, 2) + ',' + format_fixed(m.max_error_s, 3) + ',' +
           std::to_string(m.n_bars) + ',' + std::to_string(m.not_reached) + '\n';
  }
  return out;
}

}  // namespace operatrack
