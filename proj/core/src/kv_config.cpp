#include "operatrack/kv_config.hpp"

#include <cctype>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"

namespace operatrack {

namespace {

std::string trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::pair<std::string, std::string> split_assignment(std::string_view line, std::size_t line_no) {
  const std::size_t eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
  }
  std::string key = trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
  return {key, trim(line.substr(eq + 1))};
}

template <typename T, typename Parse>
T convert(const std::string& key, const std::string& value, Parse parse) {
  try {
    return parse(value);
  } catch (const DataError&) {
    throw ConfigError("config key '" + key + "': invalid value '" + value + "'");
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig kv;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto [key, value] = split_assignment(line, line_no);
    if (kv.contains(key)) throw ConfigError("duplicate config key '" + key + "'");
    kv.values_[key] = value;
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse(text);
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + '\n';
  return out;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void KeyValueConfig::apply_override(std::string_view assignment) {
  auto [key, value] = split_assignment(assignment, 0);
  values_[key] = value;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  return static_cast<int>(convert<long long>(key, *v, [](const std::string& s) { return parse_integer(s, "config"); }));
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  return convert<double>(key, *v, [](const std::string& s) { return parse_double(s, "config"); });
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "off" || *v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

void KeyValueConfig::reject_unknown(const std::set<std::string>& known) const {
  for (const auto& [k, v] : values_) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
}

std::set<std::string> feature_config_keys(const std::string& prefix) {
  std::set<std::string> keys;
  for (const char* k : {"kind", "sample_rate_hz", "n_mfcc", "skip", "window_ms", "hop_ms", "n_mels",
                        "lpc_order", "te_cepstral_order", "te_tol", "te_max_iter"}) {
    keys.insert(prefix + "." + k);
  }
  return keys;
}

FeatureConfig feature_config_from(const KeyValueConfig& kv, const std::string& prefix,
                                  const FeatureConfig& defaults) {
  FeatureConfig c = defaults;
  if (auto kind = kv.get(prefix + ".kind")) c.kind = parse_spectrum_kind(*kind);
  c.sample_rate_hz = kv.get_int(prefix + ".sample_rate_hz", c.sample_rate_hz);
  c.n_mfcc = kv.get_int(prefix + ".n_mfcc", c.n_mfcc);
  c.skip = kv.get_int(prefix + ".skip", c.skip);
  c.window_ms = kv.get_double(prefix + ".window_ms", c.window_ms);
  c.hop_ms = kv.get_double(prefix + ".hop_ms", c.hop_ms);
  c.n_mels = kv.get_int(prefix + ".n_mels", c.n_mels);
  c.lpc_order = kv.get_int(prefix + ".lpc_order", c.lpc_order);
  c.te_cepstral_order = kv.get_int(prefix + ".te_cepstral_order", c.te_cepstral_order);
  c.te_tol = kv.get_double(prefix + ".te_tol", c.te_tol);
  c.te_max_iter = kv.get_int(prefix + ".te_max_iter", c.te_max_iter);
  c.validate();
  return c;
}

void store_feature_config(KeyValueConfig& kv, const std::string& prefix, const FeatureConfig& c) {
  std::string kind(to_string(c.kind));
  for (char& ch : kind) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  kv.set(prefix + ".kind", kind);
  kv.set(prefix + ".sample_rate_hz", std::to_string(c.sample_rate_hz));
  kv.set(prefix + ".n_mfcc", std::to_string(c.n_mfcc));
  kv.set(prefix + ".skip", std::to_string(c.skip));
  kv.set(prefix + ".window_ms", format_exact(c.window_ms));
  kv.set(prefix + ".hop_ms", format_exact(c.hop_ms));
  kv.set(prefix + ".n_mels", std::to_string(c.n_mels));
  kv.set(prefix + ".lpc_order", std::to_string(c.lpc_order));
  kv.set(prefix + ".te_cepstral_order", std::to_string(c.te_cepstral_order));
  kv.set(prefix + ".te_tol", format_exact(c.te_tol));
  kv.set(prefix + ".te_max_iter", std::to_string(c.te_max_iter));
}

}  // namespace operatrack
