#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "operatrack/audio_io.hpp"
#include "operatrack/features.hpp"
#include "operatrack/oltw.hpp"

namespace operatrack {

struct BarAnnotation {
  long long bar_id;
  double ref_time_s;
  double target_time_s;
  friend bool operator==(const BarAnnotation&, const BarAnnotation&) = default;
};

/// Throws DataError unless both time columns are finite, non-negative and strictly increasing.
void validate_annotations(std::span<const BarAnnotation> bars);

/// "bar_id,ref_time_s,target_time_s"
std::string annotations_csv(std::span<const BarAnnotation> bars);
std::vector<BarAnnotation> parse_annotations_csv(std::string_view text);
std::vector<BarAnnotation> load_annotations(const std::filesystem::path& path);

struct BarError {
  long long bar_id;
  double error_s;
  bool reached;
  friend bool operator==(const BarError&, const BarError&) = default;
};

/// For each bar, the earliest path time whose reference time reaches the bar's reference
/// time, compared against the bar's target time. Bars the path never reaches are scored
/// against the final path time and flagged.
std::vector<BarError> bar_errors(std::span<const TimePoint> path, std::span<const BarAnnotation> bars);

struct Metrics {
  double mean_error_s = 0.0;
  double pct_le_1s = 0.0;
  double pct_le_2s = 0.0;
  double pct_le_5s = 0.0;
  double max_error_s = 0.0;
  std::size_t n_bars = 0;
  std::size_t not_reached = 0;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Thresholds are inclusive. Throws DataError on empty input.
Metrics summarize(std::span<const double> errors_s);
Metrics summarize(std::span<const BarError> errors);

/// Bar errors pooled over several runs.
Metrics summarize_pooled(std::span<const std::vector<BarError>> runs);

std::string bar_errors_csv(std::span<const BarError> errors);
/// Header "mean_error_s,pct_le_1s,pct_le_2s,pct_le_5s,max_error_s,n_bars,not_reached".
std::string metrics_csv(const Metrics& m);
/// Human-readable block, one "name: value" per line.
std::string metrics_text(const Metrics& m);

/// "0.8s", "91.8%"
std::string format_mean_seconds(double seconds);
std::string format_percent(double pct);

/// Left-aligned text columns separated by two spaces, with a dashed rule under the header.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

/// Cells of a per-strategy summary row: mean, <=1s, <=2s, <=5s.
std::vector<std::string> summary_cells(const Metrics& m);

struct GridSpace {
  std::vector<SpectrumKind> kinds;
  std::vector<int> sample_rates_hz;
  std::vector<int> n_mfccs;
  std::vector<int> skips;

  /// {Spec, LPC, TE} x {1500 ... 44100} x {25 ... 200} x {0, 5}.
  static GridSpace full();
  std::size_t size() const;
  /// Configurations in kind, rate, n_mfcc, skip order.
  std::vector<FeatureConfig> enumerate() const;
};

struct GridResult {
  FeatureConfig config;
  Metrics metrics;
};

struct EvalItem {
  std::string name;
  AudioBuffer reference;
  AudioBuffer target;
  std::vector<BarAnnotation> annotations;
};

/// Sort key: pct_le_1s descending, mean ascending, then kind, rate, n_mfcc, skip.
bool ranks_before(const GridResult& a, const GridResult& b);
void rank_results(std::vector<GridResult>& results);

/// Single-tracker run of one configuration over every item, bar errors pooled.
Metrics evaluate_config(std::span<const EvalItem> dataset, const FeatureConfig& config,
                        const OltwParams& params);

struct GridOptions {
  OltwParams params;
  unsigned threads = 0;  // 0: hardware concurrency
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Evaluates every configuration of `space` and returns them ranked. Spectra are shared
/// between configurations with the same kind, rate and FFT size.
std::vector<GridResult> grid_search(std::span<const EvalItem> dataset, const GridSpace& space,
                                    const GridOptions& options = {});

/// "rank,feature,sr,n_mfcc,skip,mean_ms,pct_le_1s,pct_le_2s,pct_le_5s,max_error_s,n_bars"
std::string grid_csv(std::span<const GridResult> ranked);
/// Columns feature, #sr, #MFCC, #skip, mean (ms), <=1s (%); optional trailing baseline row.
std::string grid_table(std::span<const GridResult> ranked, const GridResult* baseline = nullptr);

}  // namespace operatrack
