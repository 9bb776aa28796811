#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"
#include "operatrack/eval.hpp"

namespace operatrack {

namespace {

std::vector<BarError> run_single(const FeatureMatrix& ref, const FeatureMatrix& tgt,
                                 std::span<const BarAnnotation> bars, const OltwParams& params) {
  AlignmentPath path = track_online(ref, tgt, params);
  return bar_errors(path.times(), bars);
}

auto config_key(const FeatureConfig& c) {
  return std::make_tuple(static_cast<int>(c.kind), c.sample_rate_hz, c.n_mfcc, c.skip);
}

}  // namespace

GridSpace GridSpace::full() {
  return {{SpectrumKind::Spec, SpectrumKind::Lpc, SpectrumKind::TrueEnvelope},
          {1500, 3000, 6000, 12000, 24000, 44100},
          {25, 50, 75, 100, 150, 200},
          {0, 5}};
}

std::size_t GridSpace::size() const {
  return kinds.size() * sample_rates_hz.size() * n_mfccs.size() * skips.size();
}

std::vector<FeatureConfig> GridSpace::enumerate() const {
  std::vector<FeatureConfig> out;
  out.reserve(size());
  for (SpectrumKind kind : kinds)
    for (int sr : sample_rates_hz)
      for (int n : n_mfccs)
        for (int skip : skips) {
          FeatureConfig c;
          c.kind = kind;
          c.sample_rate_hz = sr;
          c.n_mfcc = n;
          c.skip = skip;
          out.push_back(c);
        }
  return out;
}

bool ranks_before(const GridResult& a, const GridResult& b) {
  if (a.metrics.pct_le_1s != b.metrics.pct_le_1s) return a.metrics.pct_le_1s > b.metrics.pct_le_1s;
  if (a.metrics.mean_error_s != b.metrics.mean_error_s)
    return a.metrics.mean_error_s < b.metrics.mean_error_s;
  return config_key(a.config) < config_key(b.config);
}

void rank_results(std::vector<GridResult>& results) {
  std::sort(results.begin(), results.end(), ranks_before);
}

Metrics evaluate_config(std::span<const EvalItem> dataset, const FeatureConfig& config,
                        const OltwParams& params) {
  if (dataset.empty()) throw DataError("empty dataset");
  FeatureExtractor extractor(config);
  std::vector<std::vector<BarError>> runs;
  for (const auto& item : dataset) {
    runs.push_back(run_single(extractor.extract(item.reference), extractor.extract(item.target),
                              item.annotations, params));
  }
  return summarize_pooled(runs);
}

std::vector<GridResult> grid_search(std::span<const EvalItem> dataset, const GridSpace& space,
                                    const GridOptions& options) {
  if (dataset.empty()) throw DataError("empty dataset");
  options.params.validate();
  const std::vector<FeatureConfig> configs = space.enumerate();
  for (const auto& c : configs) c.validate();

  // Group configurations that can share spectra.
  std::map<std::tuple<int, int, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& c = configs[i];
    groups[{static_cast<int>(c.kind), c.sample_rate_hz, c.fft_size()}].push_back(i);
  }
  std::vector<std::vector<std::size_t>> work;
  for (auto& [key, members] : groups) work.push_back(std::move(members));

  std::vector<GridResult> results(configs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t g = next.fetch_add(1);
      if (g >= work.size()) return;
      try {
        const auto& members = work[g];
        const FeatureConfig& first = configs[members.front()];
        std::vector<Spectrogram> ref_spec, tgt_spec;
        for (const auto& item : dataset) {
          ref_spec.push_back(compute_spectrogram(resample(item.reference, first.sample_rate_hz), first));
          tgt_spec.push_back(compute_spectrogram(resample(item.target, first.sample_rate_hz), first));
        }
        for (std::size_t idx : members) {
          const FeatureConfig& c = configs[idx];
          std::vector<std::vector<BarError>> runs;
          for (std::size_t p = 0; p < dataset.size(); ++p) {
            runs.push_back(run_single(mfcc_from_spectrogram(ref_spec[p], c),
                                      mfcc_from_spectrogram(tgt_spec[p], c),
                                      dataset[p].annotations, options.params));
          }
          results[idx] = {c, summarize_pooled(runs)};
          std::size_t d = done.fetch_add(1) + 1;
          if (options.progress) {
            std::lock_guard lock(progress_mutex);
            options.progress(d, configs.size());
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(work.size());
        return;
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(work.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  rank_results(results);
  return results;
}

std::string grid_csv(std::span<const GridResult> ranked) {
  std::string out = "rank,feature,sr,n_mfcc,skip,mean_ms,pct_le_1s,pct_le_2s,pct_le_5s,max_error_s,n_bars\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i];
    out += std::to_string(i + 1) + ',' + std::string(to_string(r.config.kind)) + ',' +
           std::to_string(r.config.sample_rate_hz) + ',' + std::to_string(r.config.n_mfcc) + ',' +
           std::to_string(r.config.skip) + ',' + format_fixed(r.metrics.mean_error_s * 1000.0, 1) +
           ',' + format_fixed(r.metrics.pct_le_1s, 2) + ',' + format_fixed(r.metrics.pct_le_2s, 2) +
           ',' + format_fixed(r.metrics.pct_le_5s, 2) + ',' + format_fixed(r.metrics.max_error_s, 3) +
           ',' + std::to_string(r.metrics.n_bars) + '\n';
  }
  return out;
}

std::string grid_table(std::span<const GridResult> ranked, const GridResult* baseline) {
  auto cells = [](const GridResult& r, std::string label) {
    return std::vector<std::string>{std::move(label), std::to_string(r.config.sample_rate_hz),
                                    std::to_string(r.config.n_mfcc), std::to_string(r.config.skip),
                                    format_fixed(r.metrics.mean_error_s * 1000.0, 0),
                                    format_fixed(r.metrics.pct_le_1s, 2)};
  };
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : ranked) rows.push_back(cells(r, std::string(to_string(r.config.kind))));
  if (baseline) rows.push_back(cells(*baseline, "baseline"));
  return render_table({"feature", "#sr", "#MFCC", "#skip", "mean (ms)", "<=1s (%)"}, rows);
}

}  // namespace operatrack
