#include "cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <thread>

#include "operatrack/audio_io.hpp"
#include "operatrack/classify.hpp"
#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"
#include "operatrack/eval.hpp"
#include "operatrack/synth.hpp"
#include "operatrack/tracking.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;

namespace operatrack::cli {
namespace {

// A flag of one subcommand, bound to a config key.
struct Flag {
  Flag(std::string n, std::string k, std::string h) : name(std::move(n)), key(std::move(k)), help(std::move(h)) {}

  std::string name;
  std::string key;
  std::string help;
  std::string value;
  CLI::Option* option = nullptr;
};

using Handler = std::function<int(const KeyValueConfig&, std::ostream&, std::ostream&)>;

// Held by address: CLI11 writes into the members.
struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  std::vector<std::string> overrides;
  std::vector<Flag> flags;
  Handler handler;

  Command(CLI::App& root, const std::string& name, const std::string& description,
          std::vector<Flag> flag_list, Handler fn)
      : flags(std::move(flag_list)), handler(std::move(fn)) {
    app = root.add_subcommand(name, description);
    app->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "config override key=value (repeatable, applied last)");
    for (auto& f : flags) f.option = app->add_option(f.name, f.value, f.help + " [" + f.key + "]");
  }
  Command(const Command&) = delete;
  Command& operator=(const Command&) = delete;
};

KeyValueConfig resolve_config(const Command& c) {
  KeyValueConfig kv = c.config_file.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.config_file);
  for (const auto& f : c.flags) {
    if (f.option && f.option->count() > 0) kv.set(f.key, f.value);
  }
  for (const auto& o : c.overrides) kv.apply_override(o);
  validate_config(kv);
  return kv;
}

fs::path existing_file(const KeyValueConfig& kv, const std::string& key) {
  fs::path p = required_path(kv, key);
  if (!fs::is_regular_file(p)) throw ConfigError(key + ": no such file '" + p.string() + "'");
  return p;
}

fs::path output_dir(const KeyValueConfig& kv) {
  fs::path p = required_path(kv, "output");
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError("output: cannot create directory '" + p.string() + "'");
  return p;
}

unsigned thread_count(const KeyValueConfig& kv) {
  const int t = kv.get_int("threads", 0);
  return t > 0 ? static_cast<unsigned>(t) : std::max(1u, std::thread::hardware_concurrency());
}

// Runs job(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::string pair_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "pair_%03zu", i);
  return buf;
}

int cmd_synth(const KeyValueConfig& kv, std::ostream& out, std::ostream& err) {
  const SynthSettings s = synth_settings(kv);
  const fs::path dir = output_dir(kv);
  std::vector<DatasetEntry> entries(s.pairs);
  std::mutex mu;
  parallel_for(s.pairs, thread_count(kv), [&](std::size_t i) {
    SynthSpec spec = SynthSpec::random(s.duration_s, pair_seed(s.seed, i), s.speech_fraction);
    spec.noise_snr_db = s.snr_db;
    spec.timbre_perturbation = s.timbre_perturbation;
    spec.sample_rate_hz = s.sample_rate_hz;
    entries[i] = write_pair(dir, pair_name(i), generate_pair(spec));
    std::lock_guard lock(mu);
    err << "synth: " << pair_name(i) << '\n';
  });
  write_manifest(dir, entries);
  write_text_file(dir / "config.txt", config_record(kv));
  out << "wrote " << s.pairs << " pairs to " << dir.string() << '\n';
  return kOk;
}

ProbabilityStream probabilities_for_track(const KeyValueConfig& kv, const AudioBuffer& target) {
  if (kv.get("probabilities")) return load_probability_stream(existing_file(kv, "probabilities"));
  if (kv.get("labels")) {
    return oracle_stream_from_labels(parse_labels_csv(read_text_file(existing_file(kv, "labels"))),
                                     target.duration_s());
  }
  return heuristic_probabilities(target);
}

void write_metrics(const fs::path& dir, const std::vector<BarError>& errors, const Metrics& m) {
  write_text_file(dir / "bar_errors.csv", bar_errors_csv(errors));
  write_text_file(dir / "metrics.csv", metrics_csv(m));
  write_text_file(dir / "metrics.txt", metrics_text(m));
}

int cmd_track(const KeyValueConfig& kv, std::ostream& out, std::ostream&) {
  const fs::path ref_path = existing_file(kv, "reference");
  const fs::path tgt_path = existing_file(kv, "target");
  const fs::path ann_path = existing_file(kv, "annotations");
  if (kv.get("probabilities")) existing_file(kv, "probabilities");
  if (kv.get("labels")) existing_file(kv, "labels");
  const TrackingStrategy strategy = tracking_strategy(kv);
  const TrackerSetup setup = tracker_setup(kv);
  const fs::path dir = output_dir(kv);

  const AudioBuffer reference = load_audio(ref_path);
  const AudioBuffer target = load_audio(tgt_path);
  const auto annotations = load_annotations(ann_path);
  const ProbabilityStream probs = is_fused(strategy) ? probabilities_for_track(kv, target) : ProbabilityStream{};

  const TrackingStrategy only[] = {strategy};
  const PairFeatures features = extract_pair_features(reference, target, setup, only);
  const AlignmentPath path = run_strategy(features, strategy, setup, probs);

  // Scored from the written text so that evaluate reproduces these numbers exactly.
  const std::string text = path_csv(path.times());
  const auto errors = bar_errors(parse_path_csv(text), annotations);
  const Metrics m = summarize(errors);
  write_text_file(dir / "path.csv", text);
  write_metrics(dir, errors, m);
  write_text_file(dir / "config.txt", config_record(kv));
  out << "strategy:    " << to_string(strategy) << '\n' << metrics_text(m);
  return kOk;
}

int cmd_evaluate(const KeyValueConfig& kv, std::ostream& out, std::ostream&) {
  const fs::path path_file = existing_file(kv, "path");
  const fs::path ann_path = existing_file(kv, "annotations");
  std::optional<fs::path> dir;
  if (kv.get("output")) dir = output_dir(kv);

  const auto path = parse_path_csv(read_text_file(path_file));
  const auto errors = bar_errors(path, load_annotations(ann_path));
  const Metrics m = summarize(errors);
  if (dir) write_metrics(*dir, errors, m);
  out << metrics_text(m);
  for (const auto& e : errors) {
    if (!e.reached) out << "bar " << e.bar_id << ": not reached\n";
  }
  return kOk;
}

struct DatasetItem {
  EvalItem item;
  DatasetEntry entry;
};

std::vector<DatasetItem> load_dataset(const KeyValueConfig& kv, std::ostream& err) {
  const fs::path dir = required_path(kv, "dataset");
  if (!fs::is_directory(dir)) throw ConfigError("dataset: no such directory '" + dir.string() + "'");
  const auto entries = read_manifest(dir);
  if (entries.empty()) throw DataError("dataset '" + dir.string() + "' is empty");
  std::vector<DatasetItem> items;
  for (const auto& e : entries) {
    err << "load: " << e.name << '\n';
    items.push_back({{e.name, load_audio(e.reference), load_audio(e.target), load_annotations(e.annotations)}, e});
  }
  return items;
}

int cmd_grid(const KeyValueConfig& kv, std::ostream& out, std::ostream& err) {
  const GridSpace space = grid_space(kv);
  const TrackerSetup setup = tracker_setup(kv);
  const int top = kv.get_int("grid.top", 0);
  const fs::path dir = output_dir(kv);
  const auto loaded = load_dataset(kv, err);
  std::vector<EvalItem> items;
  for (const auto& d : loaded) items.push_back(d.item);

  OltwParams params = setup.params;
  params.normalize_distances = setup.normalize.value_or(false);
  GridOptions options;
  options.params = params;
  options.threads = thread_count(kv);
  options.progress = [&err](std::size_t done, std::size_t total) {
    if (done == total || done % 12 == 0) err << "grid: " << done << "/" << total << '\n';
  };
  std::vector<GridResult> ranked = grid_search(items, space, options);
  if (top > 0 && static_cast<std::size_t>(top) < ranked.size()) ranked.resize(static_cast<std::size_t>(top));
  const GridResult baseline{setup.music, evaluate_config(items, setup.music, params)};

  const std::string table = grid_table(ranked, &baseline);
  write_text_file(dir / "grid.csv", grid_csv(ranked));
  write_text_file(dir / "grid.txt", table);
  write_text_file(dir / "config.txt", config_record(kv));
  out << table;
  return kOk;
}

int cmd_compare(const KeyValueConfig& kv, std::ostream& out, std::ostream& err) {
  const std::string source = kv.get_string("compare.probabilities", "oracle");
  const TrackerSetup setup = tracker_setup(kv);
  const fs::path dir = output_dir(kv);
  const auto loaded = load_dataset(kv, err);

  std::vector<ComparisonItem> items;
  for (const auto& d : loaded) {
    ProbabilityStream probs;
    if (source == "oracle") {
      probs = oracle_stream_from_labels(parse_labels_csv(read_text_file(d.entry.labels)), d.item.target.duration_s());
    } else if (source == "file") {
      probs = load_probability_stream(d.entry.probabilities);
    } else {
      probs = heuristic_probabilities(d.item.target);
    }
    items.push_back({d.item.name, d.item.reference, d.item.target, d.item.annotations, std::move(probs)});
  }
  const auto results = compare_strategies(items, setup, all_tracking_strategies());
  const std::string table = comparison_table(results);
  write_text_file(dir / "comparison.csv", comparison_csv(results));
  write_text_file(dir / "comparison.txt", table);
  write_text_file(dir / "config.txt", config_record(kv));
  out << table;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"operatrack: online audio-to-audio alignment with feature-specialised tracker fusion"};
  app.name("operatrack");
  app.require_subcommand(1);

  std::list<Command> commands;
  commands.emplace_back(app, "synth", "generate a synthetic reference/target corpus",
                        std::vector<Flag>{{"--pairs", "synth.pairs", "number of pairs"},
                                          {"--duration", "synth.duration_s", "reference duration in seconds"},
                                          {"--seed", "seed", "corpus seed"},
                                          {"--speech-fraction", "synth.speech_fraction", "share of speech-like segments"},
                                          {"--snr-db", "synth.snr_db", "target noise level"},
                                          {"--out", "output", "dataset directory"},
                                          {"--threads", "threads", "worker threads (0: all cores)"}},
                        cmd_synth);
  commands.emplace_back(app, "track", "track a target recording against a reference",
                        std::vector<Flag>{{"--reference", "reference", "reference audio"},
                                          {"--target", "target", "target audio"},
                                          {"--annotations", "annotations", "bar annotations CSV"},
                                          {"--strategy", "strategy", "tracking strategy"},
                                          {"--probabilities", "probabilities", "classifier probability CSV"},
                                          {"--labels", "labels", "segment labels CSV (oracle probabilities)"},
                                          {"--out", "output", "output directory"}},
                        cmd_track);
  commands.emplace_back(app, "grid", "single-tracker feature grid search over a dataset",
                        std::vector<Flag>{{"--dataset", "dataset", "dataset directory with manifest.csv"},
                                          {"--top", "grid.top", "keep the N best rows (0: all)"},
                                          {"--kind", "grid.kinds", "spectrum kinds, comma separated"},
                                          {"--sr", "grid.sample_rates", "sample rates, comma separated"},
                                          {"--n-mfcc", "grid.n_mfccs", "coefficient counts, comma separated"},
                                          {"--skip", "grid.skips", "skipped coefficients, comma separated"},
                                          {"--out", "output", "output directory"},
                                          {"--threads", "threads", "worker threads (0: all cores)"}},
                        cmd_grid);
  commands.emplace_back(app, "evaluate", "score a stored alignment path against bar annotations",
                        std::vector<Flag>{{"--path", "path", "alignment path CSV"},
                                          {"--annotations", "annotations", "bar annotations CSV"},
                                          {"--out", "output", "optional output directory"}},
                        cmd_evaluate);
  commands.emplace_back(app, "compare", "run every tracking strategy over a dataset",
                        std::vector<Flag>{{"--dataset", "dataset", "dataset directory with manifest.csv"},
                                          {"--probabilities", "compare.probabilities", "oracle | file | heuristic"},
                                          {"--out", "output", "output directory"}},
                        cmd_compare);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    for (const auto& c : commands) {
      if (c.app->parsed()) return c.handler(resolve_config(c), out, err);
    }
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace operatrack::cli
