#include "operatrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"

namespace operatrack {

namespace {

const std::vector<std::string> kAnnotationHeader = {"bar_id", "ref_time_s", "target_time_s"};

double percent(std::size_t count, std::size_t total) {
  return 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

}  // namespace

void validate_annotations(std::span<const BarAnnotation> bars) {
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    if (!std::isfinite(b.ref_time_s) || !std::isfinite(b.target_time_s) || b.ref_time_s < 0.0 ||
        b.target_time_s < 0.0)
      throw DataError("bar " + std::to_string(b.bar_id) + ": invalid time");
    if (i > 0 && (b.ref_time_s <= bars[i - 1].ref_time_s ||
                  b.target_time_s <= bars[i - 1].target_time_s))
      throw DataError("bar " + std::to_string(b.bar_id) + ": times must be strictly increasing");
  }
}

std::string annotations_csv(std::span<const BarAnnotation> bars) {
  std::string out = "bar_id,ref_time_s,target_time_s\n";
  for (const auto& b : bars) {
    out += std::to_string(b.bar_id) + ',' + format_exact(b.ref_time_s) + ',' +
           format_exact(b.target_time_s) + '\n';
  }
  return out;
}

std::vector<BarAnnotation> parse_annotations_csv(std::string_view text) {
  CsvTable table = parse_csv(text, kAnnotationHeader);
  std::vector<BarAnnotation> bars;
  bars.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    bars.push_back({parse_integer(row[0], "bar_id"), parse_double(row[1], "ref_time_s"),
                    parse_double(row[2], "target_time_s")});
  }
  validate_annotations(bars);
  return bars;
}

std::vector<BarAnnotation> load_annotations(const std::filesystem::path& path) {
  return parse_annotations_csv(read_text_file(path));
}

std::vector<BarError> bar_errors(std::span<const TimePoint> path,
                                 std::span<const BarAnnotation> bars) {
  if (bars.empty()) throw DataError("no bar annotations");
  if (path.empty()) throw DataError("empty alignment path");
  std::vector<BarError> out;
  out.reserve(bars.size());
  std::size_t i = 0;
  for (const auto& bar : bars) {
    // Bars are increasing in reference time, so each crossing is at or after the previous one.
    while (i < path.size() && path[i].ref_s < bar.ref_time_s) ++i;
    if (i < path.size()) {
      out.push_back({bar.bar_id, std::abs(path[i].target_s - bar.target_time_s), true});
    } else {
      out.push_back({bar.bar_id, std::abs(path.back().target_s - bar.target_time_s), false});
    }
  }
  return out;
}

Metrics summarize(std::span<const double> errors_s) {
  if (errors_s.empty()) throw DataError("no errors to summarize");
  Metrics m;
  double sum = 0.0;
  std::size_t le1 = 0, le2 = 0, le5 = 0;
  for (double e : errors_s) {
    if (!std::isfinite(e) || e < 0.0) throw DataError("invalid error value");
    sum += e;
    m.max_error_s = std::max(m.max_error_s, e);
    le1 += e <= 1.0;
    le2 += e <= 2.0;
    le5 += e <= 5.0;
  }
  m.n_bars = errors_s.size();
  m.mean_error_s = sum / static_cast<double>(m.n_bars);
  m.pct_le_1s = percent(le1, m.n_bars);
  m.pct_le_2s = percent(le2, m.n_bars);
  m.pct_le_5s = percent(le5, m.n_bars);
  return m;
}

Metrics summarize(std::span<const BarError> errors) {
  std::vector<double> values;
  values.reserve(errors.size());
  std::size_t missed = 0;
  for (const auto& e : errors) {
    values.push_back(e.error_s);
    missed += !e.reached;
  }
  Metrics m = summarize(values);
  m.not_reached = missed;
  return m;
}

Metrics summarize_pooled(std::span<const std::vector<BarError>> runs) {
  std::vector<BarError> all;
  for (const auto& r : runs) all.insert(all.end(), r.begin(), r.end());
  return summarize(std::span<const BarError>(all));
}

std::string bar_errors_csv(std::span<const BarError> errors) {
  std::string out = "bar_id,error_s,reached\n";
  for (const auto& e : errors) {
    out += std::to_string(e.bar_id) + ',' + format_fixed(e.error_s, 3) + ',' +
           (e.reached ? "1" : "0") + '\n';
  }
  return out;
}

std::string metrics_csv(const Metrics& m) {
  return "mean_error_s,pct_le_1s,pct_le_2s,pct_le_5s,max_error_s,n_bars,not_reached\n" +
         format_exact(m.mean_error_s) + ',' + format_exact(m.pct_le_1s) + ',' +
         format_exact(m.pct_le_2s) + ',' + format_exact(m.pct_le_5s) + ',' +
         format_exact(m.max_error_s) + ',' + std::to_string(m.n_bars) + ',' +
         std::to_string(m.not_reached) + '\n';
}

std::string metrics_text(const Metrics& m) {
  std::string out;
  out += "mean error:  " + format_fixed(m.mean_error_s, 3) + " s\n";
  out += "<= 1s:       " + format_percent(m.pct_le_1s) + '\n';
  out += "<= 2s:       " + format_percent(m.pct_le_2s) + '\n';
  out += "<= 5s:       " + format_percent(m.pct_le_5s) + '\n';
  out += "max error:   " + format_fixed(m.max_error_s, 3) + " s\n";
  out += "bars:        " + std::to_string(m.n_bars) + '\n';
  out += "not reached: " + std::to_string(m.not_reached) + '\n';
  return out;
}

std::string format_mean_seconds(double seconds) { return format_fixed(seconds, 1) + "s"; }

std::string format_percent(double pct) { return format_fixed(pct, 1) + "%"; }

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], row[c].size());

  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < width.size(); ++c) {
      std::string cell = c < cells.size() ? cells[c] : "";
      s += cell;
      if (c + 1 < width.size()) s += std::string(width[c] - cell.size() + 2, ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + '\n';
  };

  std::string out = line(header);
  std::size_t total = 0;
  for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c + 1 < width.size() ? 2 : 0);
  out += std::string(total, '-') + '\n';
  for (const auto& row : rows) out += line(row);
  return out;
}

std::vector<std::string> summary_cells(const Metrics& m) {
  return {format_mean_seconds(m.mean_error_s), format_percent(m.pct_le_1s),
          format_percent(m.pct_le_2s), format_percent(m.pct_le_5s)};
}

}  // namespace operatrack
