#include "operatrack/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"

namespace operatrack {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kOutputGain = 0.15;
constexpr int kMaxHarmonics = 24;
constexpr double kMusicBandLimitHz = 12000.0;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Distributions written out by hand: the standard ones are not specified bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix(seed)) {}
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * unit(); }
  double log_uniform(double a, double b) { return a * std::pow(b / a, unit()); }
  int integer(int lo, int hi) { return lo + static_cast<int>(std::min<double>(unit() * (hi - lo + 1), hi - lo)); }
  double normal() {
    double u1 = 1.0 - unit();
    double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

struct Formants {
  std::array<double, 3> hz;
};

constexpr std::array<Formants, 5> kVowels = {{
    {{730.0, 1090.0, 2440.0}},
    {{270.0, 2290.0, 3010.0}},
    {{300.0, 870.0, 2240.0}},
    {{530.0, 1840.0, 2480.0}},
    {{570.0, 840.0, 2410.0}},
}};
constexpr std::array<double, 3> kFormantBandwidth = {80.0, 100.0, 150.0};

struct Chord {
  double start, end;
  std::vector<double> f0s;
  double gain;
};

struct Syllable {
  double start, end;
  int vowel, prev_vowel;
  double pitch_start_st, pitch_end_st;
  double base_f0;
  std::size_t segment;  // index among speech segments
  double gain;
};

// Voice 0: chord progression; voice 1: melody line of single notes over it.
constexpr std::size_t kVoices = 2;

struct Score {
  std::array<std::vector<Chord>, kVoices> voices;
  std::vector<Syllable> syllables;
  std::size_t speech_segments = 0;
};

struct Rendition {
  double rolloff = 1.0;
  std::array<std::vector<double>, kVoices> chord_gain;  // per chord, multiplies the score gain
  std::array<std::vector<std::vector<double>>, kVoices> harmonic_jitter;  // per chord, per harmonic
  double vibrato_rate_hz = 5.5;
  double vibrato_depth = 0.006;
  double vibrato_phase = 0.0;
  double formant_scale = 1.0;
  std::vector<double> segment_pitch_ratio;  // per speech segment
  std::vector<double> syllable_offset_st;   // per syllable
};

void add_music(Score& score, Rng& rng, double start, double end) {
  static constexpr std::array<std::array<int, 4>, 4> kShapes = {{
      {0, 4, 7, 12}, {0, 3, 7, 10}, {0, 4, 7, 11}, {0, 3, 7, 12}}};
  static constexpr std::array<int, 7> kScale = {0, 2, 4, 5, 7, 9, 11};
  auto hz = [](int midi) { return 440.0 * std::pow(2.0, (midi - 69) / 12.0); };
  double t = start;
  while (t < end - 1e-9) {
    const double len = rng.uniform(0.5, 1.2);
    const double chord_end = std::min(end, t + len);
    Chord c{t, chord_end, {}, rng.uniform(0.7, 1.0)};
    const int root = rng.integer(45, 64);
    const auto& shape = kShapes[static_cast<std::size_t>(rng.integer(0, 3))];
    const int notes = rng.integer(3, 4);
    for (int i = 0; i < notes; ++i) c.f0s.push_back(hz(root + shape[static_cast<std::size_t>(i)]));
    score.voices[0].push_back(std::move(c));

    double m = t;
    while (m < chord_end - 1e-9) {
      const double note_len = rng.uniform(0.15, 0.45);
      const int degree = kScale[static_cast<std::size_t>(rng.integer(0, 6))];
      const int midi = std::min(root + 12 + degree + (rng.unit() < 0.3 ? 12 : 0), 88);
      score.voices[1].push_back({m, std::min(chord_end, m + note_len), {hz(midi)}, rng.uniform(0.5, 0.9)});
      m += note_len;
    }
    t += len;
  }
}

void add_speech(Score& score, Rng& rng, double start, double end) {
  const double base = rng.uniform(110.0, 180.0);
  const std::size_t segment = score.speech_segments++;
  double t = start;
  int prev = rng.integer(0, 4);
  double pitch = rng.uniform(-1.0, 1.0);
  while (t < end - 1e-9) {
    double len = 1.0 / rng.uniform(3.0, 5.0);
    int vowel = rng.integer(0, 4);
    if (vowel == prev) vowel = (vowel + 1) % 5;
    double next_pitch = std::clamp(pitch + rng.uniform(-1.5, 1.5), -3.0, 3.0);
    score.syllables.push_back({t, std::min(end, t + len), vowel, prev, pitch, next_pitch, base,
                               segment, rng.uniform(0.6, 1.0)});
    prev = vowel;
    pitch = next_pitch;
    t += len;
  }
}

Rendition make_rendition(const Score& score, std::uint64_t seed, double perturbation) {
  Rendition r;
  r.segment_pitch_ratio.assign(score.speech_segments, 1.0);
  r.syllable_offset_st.assign(score.syllables.size(), 0.0);
  for (std::size_t v = 0; v < kVoices; ++v) {
    r.chord_gain[v].assign(score.voices[v].size(), 1.0);
    r.harmonic_jitter[v].assign(score.voices[v].size(), std::vector<double>(kMaxHarmonics, 1.0));
  }
  if (perturbation == 0.0) return r;
  Rng rng(seed);
  const double p = perturbation;
  r.rolloff += p * rng.uniform(-0.5, 0.5);
  for (std::size_t v = 0; v < kVoices; ++v) {
    for (double& g : r.chord_gain[v]) g = std::pow(10.0, p * rng.uniform(-6.0, 6.0) / 20.0);
    for (auto& jitter : r.harmonic_jitter[v])
      for (double& j : jitter) j = std::pow(10.0, p * 2.0 * rng.normal() / 20.0);
  }
  r.vibrato_rate_hz += p * rng.uniform(-1.0, 1.0);
  r.vibrato_phase = p * rng.uniform(0.0, kTwoPi);
  r.formant_scale += p * rng.uniform(-0.06, 0.06);
  for (double& ratio : r.segment_pitch_ratio) {
    double st = rng.uniform(1.5, 4.0) * (rng.unit() < 0.5 ? -1.0 : 1.0);
    ratio = std::pow(2.0, p * st / 12.0);
  }
  for (double& off : r.syllable_offset_st) off = p * rng.uniform(-1.5, 1.5);
  return r;
}

double resonance_gain(double f, double centre, double bandwidth) {
  double x = f / centre;
  double a = 1.0 - x * x;
  double b = f * bandwidth / (centre * centre);
  return 1.0 / std::sqrt(a * a + b * b);
}

// Sum of a_h sin(h * phase) for h = 1..a.size().
double harmonic_sum(std::span<const double> amps, double phase) {
  const double s1 = std::sin(phase);
  const double c2 = 2.0 * std::cos(phase);
  double prev = 0.0, cur = s1, acc = 0.0;
  for (double a : amps) {
    acc += a * cur;
    double next = c2 * cur - prev;
    prev = cur;
    cur = next;
  }
  return acc;
}

std::vector<double> render(const Score& score, const Rendition& rend, const WarpMap& warp,
                           std::size_t n_samples, int sr) {
  std::vector<double> out(n_samples, 0.0);
  const double nyquist_limit = 0.45 * sr;

  struct VoiceState {
    std::size_t index = 0;
    std::size_t active = SIZE_MAX;
    std::vector<double> phase;
    std::vector<std::vector<double>> amps;
  };
  std::array<VoiceState, kVoices> voices;
  std::size_t si = 0;

  std::size_t active_syllable = SIZE_MAX;
  double speech_phase = 0.0;
  std::vector<double> speech_amps;
  constexpr std::size_t kSpeechBlock = 32;

  for (std::size_t s = 0; s < n_samples; ++s) {
    const double tau = static_cast<double>(s) / sr;
    const double r = warp.to_ref(tau);
    double value = 0.0;

    const double vib =
        1.0 + rend.vibrato_depth * std::sin(kTwoPi * rend.vibrato_rate_hz * tau + rend.vibrato_phase);
    for (std::size_t v = 0; v < kVoices; ++v) {
      const auto& track = score.voices[v];
      VoiceState& st = voices[v];
      while (st.index < track.size() && track[st.index].end <= r) ++st.index;
      if (st.index >= track.size() || track[st.index].start > r) continue;
      const std::size_t ci = st.index;
      const Chord& c = track[ci];
      if (st.active != ci) {
        st.active = ci;
        st.phase.assign(c.f0s.size(), 0.0);
        st.amps.assign(c.f0s.size(), {});
        for (std::size_t n = 0; n < c.f0s.size(); ++n) {
          double norm = 0.0;
          const double limit = std::min(kMusicBandLimitHz, nyquist_limit);
          for (int h = 1; h <= kMaxHarmonics && h * c.f0s[n] * 1.01 < limit; ++h) {
            double a = std::pow(static_cast<double>(h), -rend.rolloff) *
                       rend.harmonic_jitter[v][ci][static_cast<std::size_t>(h - 1)];
            st.amps[n].push_back(a);
            norm += a * a;
          }
          for (double& a : st.amps[n]) a /= std::sqrt(norm);
        }
      }
      const double age = r - c.start;
      const double env = std::min(1.0, age / 0.04) * std::min(1.0, (c.end - r) / 0.04) *
                         (0.7 + 0.3 * std::exp(-age / 0.8));
      double sum = 0.0;
      for (std::size_t n = 0; n < c.f0s.size(); ++n) {
        st.phase[n] += kTwoPi * c.f0s[n] * vib / sr;
        if (st.phase[n] >= kTwoPi) st.phase[n] -= kTwoPi;
        sum += harmonic_sum(st.amps[n], st.phase[n]);
      }
      value += c.gain * rend.chord_gain[v][ci] * env * sum / std::sqrt(static_cast<double>(c.f0s.size()));
    }

    while (si < score.syllables.size() && score.syllables[si].end <= r) ++si;
    if (si < score.syllables.size() && score.syllables[si].start <= r) {
      const Syllable& y = score.syllables[si];
      const double x = (r - y.start) / (y.end - y.start);
      const double pitch_st = y.pitch_start_st + (y.pitch_end_st - y.pitch_start_st) * x +
                              rend.syllable_offset_st[si];
      const double f0 = y.base_f0 * rend.segment_pitch_ratio[y.segment] * std::pow(2.0, pitch_st / 12.0);
      if (active_syllable != si || s % kSpeechBlock == 0) {
        active_syllable = si;
        const double glide = std::min(1.0, x / 0.35);
        const double limit = std::min(5000.0, nyquist_limit);
        speech_amps.clear();
        double norm = 0.0;
        for (int h = 1; h * f0 < limit; ++h) {
          double f = h * f0;
          double a = 1.0 / h;
          for (std::size_t k = 0; k < 3; ++k) {
            double from = kVowels[static_cast<std::size_t>(y.prev_vowel)].hz[k];
            double to = kVowels[static_cast<std::size_t>(y.vowel)].hz[k];
            a *= resonance_gain(f, (from + (to - from) * glide) * rend.formant_scale, kFormantBandwidth[k]);
          }
          speech_amps.push_back(a);
          norm += a * a;
        }
        if (norm > 0.0)
          for (double& a : speech_amps) a /= std::sqrt(norm);
      }
      speech_phase += kTwoPi * f0 / sr;
      if (speech_phase >= kTwoPi) speech_phase -= kTwoPi;
      constexpr double kVoiced = 0.7;
      const double env = x < kVoiced ? std::sin(std::numbers::pi * x / kVoiced) : 0.0;
      value += y.gain * env * harmonic_sum(speech_amps, speech_phase);
    }

    out[s] = kOutputGain * value;
  }
  return out;
}

void add_noise(std::vector<double>& x, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db) || x.empty()) return;
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(x.size());
  const double sigma = std::sqrt(power) * std::pow(10.0, -snr_db / 20.0);
  Rng rng(seed);
  for (double& v : x) v += sigma * rng.normal();
}

Score make_score(const SynthSpec& spec) {
  Score score;
  Rng rng(spec.seed ^ 0x5C0BEull);
  double t = 0.0;
  for (const auto& seg : spec.segments) {
    double end = t + seg.length_s;
    if (seg.kind == SegmentKind::MusicLike)
      add_music(score, rng, t, end);
    else
      add_speech(score, rng, t, end);
    t = end;
  }
  return score;
}

std::size_t samples_for(double seconds, int sr) {
  return static_cast<std::size_t>(std::llround(seconds * sr));
}

}  // namespace

WarpMap::WarpMap(std::vector<double> target_s, std::vector<double> ref_s)
    : target_(std::move(target_s)), ref_(std::move(ref_s)) {
  validate();
}

WarpMap WarpMap::identity() { return WarpMap(); }

WarpMap WarpMap::constant(double slope) { return WarpMap({0.0, 1.0}, {0.0, slope}); }

std::vector<double> WarpMap::slopes() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < target_.size(); ++i)
    out.push_back((ref_[i] - ref_[i - 1]) / (target_[i] - target_[i - 1]));
  return out;
}

void WarpMap::validate() const {
  if (target_.size() < 2 || target_.size() != ref_.size() || target_[0] != 0.0 || ref_[0] != 0.0)
    throw ConfigError("invalid warp: knots must start at the origin");
  for (std::size_t i = 1; i < target_.size(); ++i) {
    if (!(target_[i] > target_[i - 1]) || !(ref_[i] > ref_[i - 1]) || !std::isfinite(target_[i]) ||
        !std::isfinite(ref_[i]))
      throw ConfigError("invalid warp: knots must be strictly increasing");
  }
  for (double s : slopes()) {
    if (s < kMinSlope * (1.0 - 1e-12) || s > kMaxSlope * (1.0 + 1e-12))
      throw ConfigError("invalid warp: slope " + format_fixed(s, 4) + " outside [0.5, 2]");
  }
}

namespace {
double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  if (x <= 0.0) return x * (ys[1] - ys[0]) / (xs[1] - xs[0]);
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs.begin());
  i = std::clamp<std::size_t>(i, 1, xs.size() - 1);
  return ys[i - 1] + (x - xs[i - 1]) * (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
}
}  // namespace

double WarpMap::to_ref(double target_s) const { return interpolate(target_, ref_, target_s); }
double WarpMap::to_target(double ref_s) const { return interpolate(ref_, target_, ref_s); }

void SynthSpec::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw ConfigError("duration must be positive");
  if (segments.empty()) throw ConfigError("segment plan is empty");
  double total = 0.0;
  for (const auto& s : segments) {
    if (!(s.length_s > 0.0)) throw ConfigError("segment lengths must be positive");
    total += s.length_s;
  }
  if (std::abs(total - duration_s) > 1e-6) throw ConfigError("segment plan does not cover the duration");
  warp.validate();
  if (std::isnan(noise_snr_db)) throw ConfigError("noise SNR must be a number");
  if (!(timbre_perturbation >= 0.0)) throw ConfigError("timbre perturbation must be non-negative");
  if (sample_rate_hz < 8000) throw ConfigError("synthesis rate must be at least 8000 Hz");
  if (!(bar_interval_s > 0.0)) throw ConfigError("bar interval must be positive");
}

SynthSpec SynthSpec::random(double duration_s, std::uint64_t seed, double speech_fraction) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw ConfigError("duration must be positive");
  if (!(speech_fraction >= 0.0 && speech_fraction <= 1.0))
    throw ConfigError("speech fraction must lie in [0, 1]");
  SynthSpec spec;
  spec.duration_s = duration_s;
  spec.seed = seed;
  Rng rng(seed ^ 0x91A7ull);

  double t = 0.0, speech = 0.0;
  bool first_speech = rng.unit() < speech_fraction;
  while (t < duration_s - 1e-9) {
    double len = rng.uniform(6.0, 14.0);
    if (duration_s - (t + len) < 3.0) len = duration_s - t;
    bool is_speech = speech_fraction >= 1.0 || (t == 0.0 ? first_speech : speech / t < speech_fraction);
    spec.segments.push_back({is_speech ? SegmentKind::SpeechLike : SegmentKind::MusicLike, len});
    if (is_speech) speech += len;
    t += len;
  }

  std::vector<double> tk{0.0}, rk{0.0};
  while (rk.back() < duration_s + 10.0) {
    double piece = rng.uniform(4.0, 10.0);
    double slope = rng.log_uniform(WarpMap::kMinSlope, WarpMap::kMaxSlope);
    tk.push_back(tk.back() + piece / slope);
    rk.push_back(rk.back() + piece);
  }
  spec.warp = WarpMap(std::move(tk), std::move(rk));
  return spec;
}

SynthPair generate_pair(const SynthSpec& spec) {
  spec.validate();
  const Score score = make_score(spec);
  const Rendition ref_rend = make_rendition(score, 0, 0.0);
  const Rendition tgt_rend = make_rendition(score, spec.seed ^ 0x7A26E7ull, spec.timbre_perturbation);

  const int sr = spec.sample_rate_hz;
  const double target_duration = spec.warp.to_target(spec.duration_s);
  std::vector<double> ref = render(score, ref_rend, WarpMap::identity(), samples_for(spec.duration_s, sr), sr);
  std::vector<double> tgt = render(score, tgt_rend, spec.warp, samples_for(target_duration, sr), sr);
  add_noise(ref, spec.noise_snr_db, spec.seed ^ 0x2EFull);
  add_noise(tgt, spec.noise_snr_db, spec.seed ^ 0x7A2ull);
  for (double& v : ref) v = std::clamp(v, -1.0, 1.0);
  for (double& v : tgt) v = std::clamp(v, -1.0, 1.0);

  SynthPair pair;
  pair.spec = spec;
  pair.reference = AudioBuffer(std::move(ref), sr);
  pair.target = AudioBuffer(std::move(tgt), sr);

  for (long long b = 1;; ++b) {
    double r = static_cast<double>(b) * spec.bar_interval_s;
    if (r >= spec.duration_s) break;
    pair.annotations.push_back({b, r, spec.warp.to_target(r)});
  }

  double t = 0.0;
  const double target_end = pair.target.duration_s();
  for (const auto& seg : spec.segments) {
    double start = std::min(spec.warp.to_target(t), target_end);
    double end = std::min(spec.warp.to_target(t + seg.length_s), target_end);
    pair.labels.push_back({seg.kind == SegmentKind::MusicLike ? SegmentClass::Music : SegmentClass::Speech,
                           start, end});
    t += seg.length_s;
  }
  return pair;
}

AudioBuffer render_segment(SegmentKind kind, double duration_s, std::uint64_t seed, int sample_rate_hz) {
  SynthSpec spec;
  spec.duration_s = duration_s;
  spec.segments = {{kind, duration_s}};
  spec.noise_snr_db = SynthSpec::kNoNoise;
  spec.seed = seed;
  spec.sample_rate_hz = sample_rate_hz;
  spec.validate();
  const Score score = make_score(spec);
  return AudioBuffer(render(score, make_rendition(score, 0, 0.0), WarpMap::identity(),
                            samples_for(duration_s, sample_rate_hz), sample_rate_hz),
                     sample_rate_hz);
}

std::uint64_t pair_seed(std::uint64_t corpus_seed, std::size_t index) {
  return splitmix(corpus_seed * 0x100000001B3ull + index);
}

DatasetEntry write_pair(const std::filesystem::path& dir, const std::string& name, const SynthPair& pair) {
  const std::filesystem::path base = dir / name;
  std::filesystem::create_directories(base);
  DatasetEntry e{name,
                 base / "reference.wav",
                 base / "target.wav",
                 base / "annotations.csv",
                 base / "labels.csv",
                 base / "probabilities.csv"};
  save_wav(e.reference, pair.reference);
  save_wav(e.target, pair.target);
  write_text_file(e.annotations, annotations_csv(pair.annotations));
  write_text_file(e.labels, labels_csv(pair.labels));
  write_text_file(e.probabilities,
                  probability_csv(oracle_stream_from_labels(pair.labels, pair.target.duration_s())));
  std::string warp = "target_s,ref_s\n";
  for (std::size_t i = 0; i < pair.spec.warp.target_knots().size(); ++i)
    warp += format_exact(pair.spec.warp.target_knots()[i]) + ',' + format_exact(pair.spec.warp.ref_knots()[i]) + '\n';
  write_text_file(base / "warp.csv", warp);
  return e;
}

void write_manifest(const std::filesystem::path& dir, std::span<const DatasetEntry> entries) {
  auto rel = [&](const std::filesystem::path& p) { return std::filesystem::relative(p, dir).generic_string(); };
  std::string out = "pair,reference,target,annotations,labels,probabilities\n";
  for (const auto& e : entries) {
    out += e.name + ',' + rel(e.reference) + ',' + rel(e.target) + ',' + rel(e.annotations) + ',' +
           rel(e.labels) + ',' + rel(e.probabilities) + '\n';
  }
  write_text_file(dir / "manifest.csv", out);
}

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dir) {
  CsvTable table = read_csv(dir / "manifest.csv",
                            {"pair", "reference", "target", "annotations", "labels", "probabilities"});
  std::vector<DatasetEntry> out;
  for (const auto& row : table.rows)
    out.push_back({row[0], dir / row[1], dir / row[2], dir / row[3], dir / row[4], dir / row[5]});
  if (out.empty()) throw DataError("empty dataset");
  return out;
}

}  // namespace operatrack
