#include <benchmark/benchmark.h>

#include <memory>

#include "operatrack/audio_io.hpp"
#include "operatrack/features.hpp"
#include "operatrack/oltw.hpp"
#include "operatrack/synth.hpp"

using namespace operatrack;

namespace {

const AudioBuffer& ten_seconds() {
  static const AudioBuffer audio = render_segment(SegmentKind::MusicLike, 10.0, 1, 44100);
  return audio;
}

void BM_Resample(benchmark::State& state) {
  const int target = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(resample(ten_seconds(), target));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(ten_seconds().size()));
}
BENCHMARK(BM_Resample)->Arg(1500)->Arg(6000)->Arg(22050)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  FeatureConfig config;
  config.kind = static_cast<SpectrumKind>(state.range(0));
  config.sample_rate_hz = 6000;
  config.n_mfcc = 50;
  config.skip = 0;
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(ten_seconds(), config));
  state.SetLabel(std::string(to_string(config.kind)));
}
BENCHMARK(BM_ExtractFeatures)
    ->Arg(static_cast<int>(SpectrumKind::Spec))
    ->Arg(static_cast<int>(SpectrumKind::Lpc))
    ->Arg(static_cast<int>(SpectrumKind::TrueEnvelope))
    ->Unit(benchmark::kMillisecond);

void BM_TrackerStep(benchmark::State& state) {
  FeatureConfig config = FeatureConfig::baseline();
  config.sample_rate_hz = 6000;
  const auto reference = std::make_shared<const FeatureMatrix>(extract_features(ten_seconds(), config));
  OltwParams params;
  params.band_width_frames = static_cast<std::size_t>(state.range(0));
  OnlineTimeWarper tracker(reference, params);
  std::size_t t = 0;
  for (auto _ : state) {
    if (t == reference->rows()) {
      state.PauseTiming();
      tracker = OnlineTimeWarper(reference, params);
      t = 0;
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(tracker.step(reference->row(t++)));
  }
}
BENCHMARK(BM_TrackerStep)->Arg(100)->Arg(500)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
