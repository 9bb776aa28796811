#include "run_config.hpp"

#include <algorithm>
#include <optional>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"

namespace operatrack::cli {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = {
        "seed", "threads", "strategy", "output", "dataset",
        "reference", "target", "annotations", "probabilities", "labels", "path",
        "oltw.band_width_frames", "oltw.max_run_count", "oltw.metric", "oltw.normalize",
        "oltw.diagonal_weight", "oltw.horizontal_weight", "oltw.vertical_weight",
        "synth.pairs", "synth.duration_s", "synth.speech_fraction", "synth.snr_db",
        "synth.timbre_perturbation", "synth.sample_rate_hz",
        "grid.kinds", "grid.sample_rates", "grid.n_mfccs", "grid.skips", "grid.top",
        "compare.probabilities", "fusion.strategy", "fusion.weight_mode",
    };
    k.merge(feature_config_keys("music"));
    k.merge(feature_config_keys("speech"));
    return k;
  }();
  return keys;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(start, end - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

OltwParams oltw_params(const KeyValueConfig& kv) {
  OltwParams p;
  const int band = kv.get_int("oltw.band_width_frames", static_cast<int>(p.band_width_frames));
  const int run = kv.get_int("oltw.max_run_count", static_cast<int>(p.max_run_count));
  if (band < 0 || run < 0) throw ConfigError("oltw band width and run count must be non-negative");
  p.band_width_frames = static_cast<std::size_t>(band);
  p.max_run_count = static_cast<std::size_t>(run);
  if (auto m = kv.get("oltw.metric")) p.distance = parse_metric(*m);
  p.step_weights.diagonal = kv.get_double("oltw.diagonal_weight", p.step_weights.diagonal);
  p.step_weights.horizontal = kv.get_double("oltw.horizontal_weight", p.step_weights.horizontal);
  p.step_weights.vertical = kv.get_double("oltw.vertical_weight", p.step_weights.vertical);
  p.validate();
  return p;
}

TrackerSetup tracker_setup(const KeyValueConfig& kv) {
  TrackerSetup s;
  s.music = feature_config_from(kv, "music", FeatureConfig::baseline());
  s.speech = feature_config_from(kv, "speech", FeatureConfig::recitative());
  s.music.validate();
  s.speech.validate();
  s.params = oltw_params(kv);
  const std::string norm = kv.get_string("oltw.normalize", "auto");
  if (norm != "auto") s.normalize = kv.get_bool("oltw.normalize", false);
  return s;
}

TrackingStrategy tracking_strategy(const KeyValueConfig& kv) {
  std::optional<TrackingStrategy> from_fusion;
  if (auto f = kv.get("fusion.strategy")) {
    const FusionStrategy fusion = parse_fusion_strategy(*f);
    const WeightMode mode = parse_weight_mode(kv.get_string("fusion.weight_mode", "constant"));
    for (TrackingStrategy t : all_tracking_strategies()) {
      if (is_fused(t) && fusion_of(t) == fusion && (fusion == FusionStrategy::Late || weight_mode_of(t) == mode))
        from_fusion = t;
    }
  } else if (kv.get("fusion.weight_mode")) {
    throw ConfigError("fusion.weight_mode needs fusion.strategy");
  }
  if (auto s = kv.get("strategy")) {
    const TrackingStrategy t = parse_tracking_strategy(*s);
    if (from_fusion && *from_fusion != t) throw ConfigError("strategy and fusion.strategy disagree");
    return t;
  }
  return from_fusion.value_or(TrackingStrategy::MsConstant);
}

SynthSettings synth_settings(const KeyValueConfig& kv) {
  SynthSettings s;
  const int pairs = kv.get_int("synth.pairs", static_cast<int>(s.pairs));
  if (pairs < 1) throw ConfigError("synth.pairs must be >= 1");
  s.pairs = static_cast<std::size_t>(pairs);
  s.duration_s = kv.get_double("synth.duration_s", s.duration_s);
  if (!(s.duration_s > 0.0)) throw ConfigError("synth.duration_s must be positive");
  s.speech_fraction = kv.get_double("synth.speech_fraction", s.speech_fraction);
  if (!(s.speech_fraction >= 0.0 && s.speech_fraction <= 1.0))
    throw ConfigError("synth.speech_fraction must lie in [0, 1]");
  s.snr_db = kv.get_double("synth.snr_db", s.snr_db);
  s.timbre_perturbation = kv.get_double("synth.timbre_perturbation", s.timbre_perturbation);
  s.sample_rate_hz = kv.get_int("synth.sample_rate_hz", s.sample_rate_hz);
  const auto seed = kv.get("seed");
  if (seed) {
    const long long v = parse_integer(*seed, "seed");
    if (v < 0) throw ConfigError("seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(v);
  }
  return s;
}

namespace {

std::vector<int> int_list(const KeyValueConfig& kv, const std::string& key, std::vector<int> fallback) {
  auto v = kv.get(key);
  if (!v) return fallback;
  std::vector<int> out;
  for (const auto& item : split_list(*v)) out.push_back(static_cast<int>(parse_integer(item, key)));
  if (out.empty()) throw ConfigError("config key '" + key + "' is an empty list");
  return out;
}

void keep_listed(std::vector<int>& all, const std::vector<int>& wanted, const std::string& key) {
  for (int w : wanted) {
    if (std::find(all.begin(), all.end(), w) == all.end())
      throw ConfigError("config key '" + key + "': " + std::to_string(w) + " is not a grid value");
  }
  all = wanted;
}

}  // namespace

GridSpace grid_space(const KeyValueConfig& kv) {
  GridSpace g = GridSpace::full();
  if (auto kinds = kv.get("grid.kinds")) {
    std::vector<SpectrumKind> list;
    for (const auto& item : split_list(*kinds)) list.push_back(parse_spectrum_kind(item));
    if (list.empty()) throw ConfigError("config key 'grid.kinds' is an empty list");
    g.kinds = list;
  }
  keep_listed(g.sample_rates_hz, int_list(kv, "grid.sample_rates", g.sample_rates_hz), "grid.sample_rates");
  keep_listed(g.n_mfccs, int_list(kv, "grid.n_mfccs", g.n_mfccs), "grid.n_mfccs");
  keep_listed(g.skips, int_list(kv, "grid.skips", g.skips), "grid.skips");
  return g;
}

std::filesystem::path required_path(const KeyValueConfig& kv, const std::string& key) {
  auto v = kv.get(key);
  if (!v || v->empty()) throw ConfigError("missing required setting '" + key + "'");
  return *v;
}

void validate_config(const KeyValueConfig& kv) {
  kv.reject_unknown(known_keys());
  tracking_strategy(kv);
  if (auto p = kv.get("compare.probabilities")) {
    if (*p != "oracle" && *p != "file" && *p != "heuristic")
      throw ConfigError("compare.probabilities must be oracle, file or heuristic");
  }
  if (auto n = kv.get("oltw.normalize"); n && *n != "auto") kv.get_bool("oltw.normalize", false);
  if (kv.get_int("threads", 0) < 0) throw ConfigError("threads must be >= 0");
  if (kv.get_int("grid.top", 0) < 0) throw ConfigError("grid.top must be >= 0");
  tracker_setup(kv);
  synth_settings(kv);
  grid_space(kv);
}

std::string config_record(const KeyValueConfig& kv) {
  KeyValueConfig copy;
  for (const auto& [k, v] : kv.entries()) {
    if (k != "output") copy.set(k, v);
  }
  return copy.serialize();
}

}  // namespace operatrack::cli
