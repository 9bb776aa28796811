#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "operatrack/features.hpp"

namespace operatrack {

/// Flat `key = value` configuration. Lines starting with '#' are comments. Keys are
/// unique; serialization is sorted by key so equal configs give identical text.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  std::string serialize() const;

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  /// Applies a `key=value` override string.
  void apply_override(std::string_view assignment);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws ConfigError naming the first key not in `known`.
  void reject_unknown(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Keys accepted by feature_config_from: "<prefix>.kind", "<prefix>.sample_rate_hz", ...
std::set<std::string> feature_config_keys(const std::string& prefix);
FeatureConfig feature_config_from(const KeyValueConfig& kv, const std::string& prefix,
                                  const FeatureConfig& defaults);
void store_feature_config(KeyValueConfig& kv, const std::string& prefix, const FeatureConfig& config);

}  // namespace operatrack
