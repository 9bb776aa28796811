#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "operatrack/eval.hpp"
#include "operatrack/kv_config.hpp"
#include "operatrack/synth.hpp"
#include "operatrack/tracking.hpp"

namespace operatrack::cli {

/// Every key a run config may hold. Feature keys exist under "music." and "speech.".
const std::set<std::string>& known_keys();

/// Checks keys and value syntax of every key that is present.
void validate_config(const KeyValueConfig& kv);

TrackerSetup tracker_setup(const KeyValueConfig& kv);
/// From "strategy", or from "fusion.strategy" plus "fusion.weight_mode"; both forms must
/// agree when given together. Defaults to ms-constant.
TrackingStrategy tracking_strategy(const KeyValueConfig& kv);
OltwParams oltw_params(const KeyValueConfig& kv);

struct SynthSettings {
  std::size_t pairs = 20;
  double duration_s = 60.0;
  double speech_fraction = 0.5;
  double snr_db = 20.0;
  double timbre_perturbation = 1.0;
  int sample_rate_hz = 44100;
  std::uint64_t seed = 7;
};
SynthSettings synth_settings(const KeyValueConfig& kv);

/// grid.kinds / grid.sample_rates / grid.n_mfccs / grid.skips restrict the full grid.
GridSpace grid_space(const KeyValueConfig& kv);

std::filesystem::path required_path(const KeyValueConfig& kv, const std::string& key);

/// Serialized config without the output key, so that reruns into another directory
/// produce the same record.
std::string config_record(const KeyValueConfig& kv);

std::vector<std::string> split_list(const std::string& text);

}  // namespace operatrack::cli
