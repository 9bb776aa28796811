#include "operatrack/classify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"
#include "operatrack/features.hpp"

namespace operatrack {

namespace {

const std::vector<std::string> kProbabilityHeader = {"time_s", "p_music", "p_speech"};
const std::vector<std::string> kLabelHeader = {"start_s", "end_s", "label"};

// Grid lookups tolerate the rounding of 3-decimal times.
constexpr double kTimeSlack = 1e-9;

double clamp_probability(double v, std::size_t& clamped) {
  if (v < 0.0 || v > 1.0) {
    ++clamped;
    return std::clamp(v, 0.0, 1.0);
  }
  return v;
}

std::size_t entries_for_duration(double duration_s) {
  double n = std::ceil(duration_s * 1000.0 / ProbabilityStream::kRateMs - kTimeSlack);
  return n > 0.0 ? static_cast<std::size_t>(n) : 0;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ClassProbabilities ProbabilityStream::at_hop(std::size_t hop) const {
  if (entries.empty()) return {};
  return entries[std::min(hop / 2, entries.size() - 1)];
}

double probability_time_s(std::size_t k) {
  return static_cast<double>(k) * ProbabilityStream::kRateMs / 1000.0;
}

ProbabilityStream parse_probability_csv(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) throw DataError("no probability entries");
  CsvTable table = parse_csv(text, kProbabilityHeader);
  if (table.rows.empty()) throw DataError("no probability entries");

  std::vector<double> times;
  std::vector<ClassProbabilities> values;
  ProbabilityStream stream;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    double t = parse_double(row[0], "time_s");
    double pm = parse_double(row[1], "p_music");
    double ps = parse_double(row[2], "p_speech");
    if (!std::isfinite(t) || t < 0.0)
      throw DataError("line " + std::to_string(table.line_numbers[i]) + ": invalid time");
    if (!std::isfinite(pm) || !std::isfinite(ps))
      throw DataError("line " + std::to_string(table.line_numbers[i]) + ": non-finite probability");
    if (!times.empty() && t <= times.back())
      throw DataError("line " + std::to_string(table.line_numbers[i]) +
                      ": times must be strictly increasing");
    times.push_back(t);
    values.push_back({clamp_probability(pm, stream.clamped_values),
                      clamp_probability(ps, stream.clamped_values)});
  }

  std::size_t count =
      static_cast<std::size_t>(std::floor(times.back() * 1000.0 / ProbabilityStream::kRateMs +
                                          kTimeSlack)) + 1;
  stream.entries.resize(count);
  std::size_t src = 0;
  for (std::size_t k = 0; k < count; ++k) {
    double g = probability_time_s(k);
    while (src + 1 < times.size() && times[src + 1] <= g + kTimeSlack) ++src;
    stream.entries[k] = values[src];
  }
  return stream;
}

ProbabilityStream load_probability_stream(const std::filesystem::path& path) {
  return parse_probability_csv(read_text_file(path));
}

std::string probability_csv(const ProbabilityStream& stream) {
  std::string out = "time_s,p_music,p_speech\n";
  for (std::size_t k = 0; k < stream.entries.size(); ++k) {
    out += format_fixed(probability_time_s(k), 3);
    out += ',';
    out += format_exact(stream.entries[k].music);
    out += ',';
    out += format_exact(stream.entries[k].speech);
    out += '\n';
  }
  return out;
}

std::string_view to_string(SegmentClass c) { return c == SegmentClass::Music ? "music" : "speech"; }

SegmentClass parse_segment_class(std::string_view text) {
  if (text == "music") return SegmentClass::Music;
  if (text == "speech") return SegmentClass::Speech;
  throw DataError("unknown segment label '" + std::string(text) + "'");
}

std::string labels_csv(std::span<const LabeledSegment> segments) {
  std::string out = "start_s,end_s,label\n";
  for (const auto& s : segments) {
    out += format_exact(s.start_s) + ',' + format_exact(s.end_s) + ',' +
           std::string(to_string(s.label)) + '\n';
  }
  return out;
}

std::vector<LabeledSegment> parse_labels_csv(std::string_view text) {
  CsvTable table = parse_csv(text, kLabelHeader);
  std::vector<LabeledSegment> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    out.push_back({parse_segment_class(row[2]), parse_double(row[0], "start_s"),
                   parse_double(row[1], "end_s")});
  }
  return out;
}

ProbabilityStream oracle_stream_from_labels(std::span<const LabeledSegment> segments,
                                            double duration_s) {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s))
    throw DataError("invalid stream duration");
  std::vector<LabeledSegment> sorted(segments.begin(), segments.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& s = sorted[i];
    if (!(s.start_s >= 0.0) || !(s.end_s >= s.start_s) || s.end_s > duration_s + kTimeSlack)
      throw DataError("segment outside stream duration");
    if (i > 0 && s.start_s < sorted[i - 1].end_s)
      throw DataError("overlapping segments");
  }

  ProbabilityStream stream;
  stream.entries.resize(entries_for_duration(duration_s));
  for (std::size_t k = 0; k < stream.entries.size(); ++k) {
    double t = probability_time_s(k);
    for (const auto& s : sorted) {
      if (t + kTimeSlack < s.start_s || t > s.end_s + kTimeSlack) continue;
      stream.entries[k] = s.label == SegmentClass::Music ? ClassProbabilities{1.0, 0.0}
                                                        : ClassProbabilities{0.0, 1.0};
    }
  }
  return stream;
}

ProbabilityStream heuristic_probabilities(const AudioBuffer& audio) {
  if (audio.empty()) throw DataError("heuristic classifier needs non-empty audio");
  using C = HeuristicConstants;

  const std::size_t n_entries =
      (audio.size() * 50 + static_cast<std::size_t>(audio.sample_rate_hz()) - 1) /
      static_cast<std::size_t>(audio.sample_rate_hz());

  AudioBuffer analysis = audio.sample_rate_hz() > C::kAnalysisRateHz
                             ? resample(audio, static_cast<int>(C::kAnalysisRateHz))
                             : audio;
  const auto x = analysis.samples();
  const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(analysis.sample_rate_hz() * 0.02)));

  // Energy of each 20 ms block; entry k never reads past the end of its block.
  std::vector<double> energy(n_entries, 0.0);
  for (std::size_t k = 0; k < n_entries; ++k) {
    double e = 0.0;
    for (std::size_t i = k * hop; i < std::min(x.size(), (k + 1) * hop); ++i) e += x[i] * x[i];
    energy[k] = e / static_cast<double>(hop);
  }

  constexpr std::size_t kWindowFrames = 50;  // 1 s at 50 Hz
  std::vector<double> env;
  ProbabilityStream stream;
  stream.entries.resize(n_entries);
  for (std::size_t k = 0; k < n_entries; ++k) {
    const std::size_t n = std::min(k + 1, kWindowFrames);
    const std::size_t first = k + 1 - n;

    env.assign(n, 0.0);
    double mean_env = 0.0, mean_energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      env[i] = std::sqrt(energy[first + i]);
      mean_env += env[i];
      mean_energy += energy[first + i];
    }
    mean_env /= static_cast<double>(n);
    mean_energy /= static_cast<double>(n);

    double low_energy = 0.0;
    for (std::size_t i = first; i <= k; ++i) low_energy += energy[i] < 0.5 * mean_energy;
    low_energy /= static_cast<double>(n);

    double am_ratio = 0.0;
    if (n >= 10) {
      for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / n);
        env[i] = (env[i] - mean_env) * w;
      }
      double in_band = 0.0, all = 0.0;
      for (std::size_t m = 1; 2 * m <= n; ++m) {
        const double hz = 50.0 * static_cast<double>(m) / static_cast<double>(n);
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          acc += env[i] * std::polar(1.0, -2.0 * std::numbers::pi * m * i / static_cast<double>(n));
        const double p = std::norm(acc);
        all += p;
        if (hz >= 2.0 && hz <= 8.0) in_band += p;
      }
      if (all > 0.0) am_ratio = in_band / all;
    }

    const double level_db = 10.0 * std::log10(mean_energy + 1e-15);
    const double gate = logistic(C::kLevelSlope * (level_db - C::kLevelCenterDb));
    const double score = C::kModulationWeight * am_ratio + low_energy;
    const double speech = logistic(C::kScoreSlope * (score - C::kScoreCenter));
    stream.entries[k] = {std::clamp(gate * (1.0 - speech), 0.0, 1.0), std::clamp(gate * speech, 0.0, 1.0)};
  }
  return stream;
}

}  // namespace operatrack
