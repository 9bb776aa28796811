#include "operatrack/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "operatrack/error.hpp"
#include "spectral.hpp"

namespace operatrack {

std::string_view to_string(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::Spec: return "Spec";
    case SpectrumKind::Lpc: return "LPC";
    case SpectrumKind::TrueEnvelope: return "TE";
  }
  return "?";
}

SpectrumKind parse_spectrum_kind(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "spec") return SpectrumKind::Spec;
  if (lower == "lpc") return SpectrumKind::Lpc;
  if (lower == "te") return SpectrumKind::TrueEnvelope;
  throw ConfigError("unknown spectrum kind '" + std::string(text) + "' (expected spec, lpc or te)");
}

FeatureConfig FeatureConfig::baseline() { return FeatureConfig{}; }

FeatureConfig FeatureConfig::recitative() {
  FeatureConfig c;
  c.kind = SpectrumKind::Lpc;
  c.sample_rate_hz = 1500;
  c.n_mfcc = 25;
  c.skip = 0;
  return c;
}

int FeatureConfig::resolved_lpc_order() const {
  if (lpc_order > 0) return lpc_order;
  return static_cast<int>(std::lround(2.0 + sample_rate_hz / 1000.0));
}

int FeatureConfig::resolved_te_cepstral_order() const {
  if (te_cepstral_order > 0) return te_cepstral_order;
  const long order = std::lround(sample_rate_hz / 200.0);
  return static_cast<int>(std::clamp<long>(order, 1, static_cast<long>(bins()) - 1));
}

std::size_t FeatureConfig::window_samples() const {
  return static_cast<std::size_t>(std::max(0L, std::lround(window_ms * sample_rate_hz / 1000.0)));
}

std::size_t FeatureConfig::hop_samples() const {
  return static_cast<std::size_t>(std::max(0L, std::lround(hop_ms * sample_rate_hz / 1000.0)));
}

std::size_t FeatureConfig::fft_size() const {
  const std::size_t need = std::max<std::size_t>({window_samples(), 2 * static_cast<std::size_t>(std::max(resolved_n_mels(), 1)), 2});
  return std::bit_ceil(need);
}

void FeatureConfig::validate() const {
  if (sample_rate_hz <= 0) throw ConfigError("sample_rate_hz must be positive");
  if (n_mfcc < 1) throw ConfigError("n_mfcc must be >= 1");
  if (skip < 0) throw ConfigError("skip must be >= 0");
  if (n_mels < 0 || lpc_order < 0 || te_cepstral_order < 0) {
    throw ConfigError("n_mels, lpc_order and te_cepstral_order must be non-negative");
  }
  if (n_mfcc + skip > resolved_n_mels()) throw ConfigError("n_mfcc + skip must not exceed n_mels");
  if (!(hop_ms > 0.0) || !(window_ms >= hop_ms)) throw ConfigError("need window_ms >= hop_ms > 0");
  if (window_samples() < 1 || hop_samples() < 1) {
    throw ConfigError("window shorter than one sample at " + std::to_string(sample_rate_hz) + " Hz");
  }
  if (!(te_tol > 0.0) || te_max_iter < 1) throw ConfigError("te_tol and te_max_iter must be positive");
  if (kind == SpectrumKind::Lpc && static_cast<std::size_t>(resolved_lpc_order()) >= window_samples()) {
    throw ConfigError("lpc_order must be smaller than the window length");
  }
}

void FeatureConfig::validate_grid_values() const {
  validate();
  constexpr std::array rates{1500, 3000, 6000, 12000, 24000, 44100};
  constexpr std::array counts{25, 50, 75, 100, 150, 200};
  if (std::find(rates.begin(), rates.end(), sample_rate_hz) == rates.end()) {
    throw ConfigError("sample rate not in the grid value set");
  }
  if (std::find(counts.begin(), counts.end(), n_mfcc) == counts.end()) {
    throw ConfigError("n_mfcc not in the grid value set");
  }
  if (skip != 0 && skip != 5) throw ConfigError("skip not in the grid value set");
}

std::string FeatureConfig::summary() const {
  std::ostringstream os;
  os << to_string(kind) << " sr=" << sample_rate_hz << " mfcc=" << n_mfcc << " skip=" << skip;
  return os.str();
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dims, double hop_ms)
    : rows_(rows), dims_(dims), hop_ms_(hop_ms), values_(rows * dims, 0.0f) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dims, double hop_ms, std::vector<float> values)
    : rows_(rows), dims_(dims), hop_ms_(hop_ms), values_(std::move(values)) {
  if (values_.size() != rows * dims) throw DataError("feature matrix: value count does not match shape");
}

FeatureMatrix FeatureMatrix::head(std::size_t rows) const {
  rows = std::min(rows, rows_);
  return FeatureMatrix(rows, dims_, hop_ms_,
                       std::vector<float>(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(rows * dims_)));
}

struct FeatureExtractor::Impl {
  FeatureConfig config;
  detail::SpectralWorkspace workspace;
  MelFilterbank filterbank;
  std::vector<double> dct_rows;  // n_mfcc x n_mels, rows [skip, skip + n_mfcc)
  std::vector<double> mel;
  std::vector<double> frame_buffer;

  explicit Impl(const FeatureConfig& c)
      : config(c),
        workspace(c.window_samples(), c.fft_size()),
        filterbank(c.sample_rate_hz, c.fft_size(), c.resolved_n_mels()),
        mel(static_cast<std::size_t>(c.resolved_n_mels())),
        frame_buffer(c.window_samples()) {
    const auto n = static_cast<std::size_t>(c.resolved_n_mels());
    const auto count = static_cast<std::size_t>(c.n_mfcc);
    dct_rows.resize(count * n);
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t k = r + static_cast<std::size_t>(c.skip);
      const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (std::size_t i = 0; i < n; ++i) {
        dct_rows[r * n + i] =
            s * std::cos(std::numbers::pi * static_cast<double>(k) * (i + 0.5) / static_cast<double>(n));
      }
    }
  }
};

FeatureExtractor::FeatureExtractor(const FeatureConfig& config) {
  config.validate();
  impl_ = std::make_unique<Impl>(config);
}

FeatureExtractor::~FeatureExtractor() = default;
FeatureExtractor::FeatureExtractor(FeatureExtractor&&) noexcept = default;
FeatureExtractor& FeatureExtractor::operator=(FeatureExtractor&&) noexcept = default;

const FeatureConfig& FeatureExtractor::config() const { return impl_->config; }

std::vector<double> FeatureExtractor::spectrum(std::span<const double> frame) {
  Impl& im = *impl_;
  const FeatureConfig& c = im.config;
  switch (c.kind) {
    case SpectrumKind::Spec: {
      std::vector<double> out(im.workspace.bins());
      im.workspace.power_spectrum(frame, out);
      return out;
    }
    case SpectrumKind::Lpc:
      return im.workspace.lpc_envelope(frame, c.resolved_lpc_order()).values;
    case SpectrumKind::TrueEnvelope: {
      std::vector<double> power(im.workspace.bins());
      im.workspace.power_spectrum(frame, power);
      return im.workspace.true_envelope(power, c.resolved_te_cepstral_order(), c.te_tol, c.te_max_iter).values;
    }
  }
  return {};
}

void FeatureExtractor::coefficients(std::span<const double> spectrum, std::span<double> out) {
  Impl& im = *impl_;
  im.filterbank.apply(spectrum, im.mel);
  for (double& e : im.mel) e = std::log(std::max(e, kMelLogFloor));
  const std::size_t n = im.mel.size();
  for (std::size_t r = 0; r < static_cast<std::size_t>(im.config.n_mfcc); ++r) {
    const double* basis = &im.dct_rows[r * n];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += basis[i] * im.mel[i];
    out[r] = acc;
  }
}

void FeatureExtractor::coefficients(std::span<const double> spectrum, std::span<float> out) {
  std::vector<double> wide(out.size());
  coefficients(spectrum, std::span<double>(wide));
  std::transform(wide.begin(), wide.end(), out.begin(), [](double v) { return static_cast<float>(v); });
}

void FeatureExtractor::process_frame(std::span<const double> frame, std::span<float> out) {
  coefficients(spectrum(frame), out);
}

Spectrogram compute_spectrogram(const AudioBuffer& audio, const FeatureConfig& config) {
  config.validate();
  if (audio.sample_rate_hz() != config.sample_rate_hz) {
    throw ConfigError("compute_spectrogram: audio must already be at the configured rate");
  }
  FeatureExtractor extractor(config);
  const FrameStream frames(audio, config.window_ms, config.hop_ms);
  Spectrogram s;
  s.frames = frames.size();
  s.bins = config.bins();
  s.values.resize(s.frames * s.bins);
  std::vector<double> buffer(frames.window_samples());
  for (std::size_t i = 0; i < s.frames; ++i) {
    frames.copy_frame(i, buffer);
    const auto spec = extractor.spectrum(buffer);
    std::copy(spec.begin(), spec.end(), s.values.begin() + static_cast<std::ptrdiff_t>(i * s.bins));
  }
  return s;
}

FeatureMatrix mfcc_from_spectrogram(const Spectrogram& spectra, const FeatureConfig& config) {
  if (spectra.bins != config.bins()) throw ConfigError("spectrogram bin grid does not match config");
  FeatureExtractor extractor(config);
  FeatureMatrix m(spectra.frames, static_cast<std::size_t>(config.n_mfcc), config.hop_ms);
  for (std::size_t i = 0; i < spectra.frames; ++i) extractor.coefficients(spectra.frame(i), m.row(i));
  return m;
}

FeatureMatrix FeatureExtractor::extract(const AudioBuffer& audio) {
  if (audio.empty()) throw DataError("extract_features: empty audio");
  const FeatureConfig& c = impl_->config;
  const AudioBuffer at_rate = resample(audio, c.sample_rate_hz);
  const FrameStream frames(at_rate, c.window_ms, c.hop_ms);
  FeatureMatrix m(frames.size(), static_cast<std::size_t>(c.n_mfcc), c.hop_ms);
  std::vector<double> buffer(frames.window_samples());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames.copy_frame(i, buffer);
    process_frame(buffer, m.row(i));
  }
  return m;
}

FeatureMatrix extract_features(const AudioBuffer& audio, const FeatureConfig& config) {
  FeatureExtractor extractor(config);
  return extractor.extract(audio);
}

std::vector<double> mfcc(std::span<const double> spectrum, const FeatureConfig& config) {
  FeatureExtractor extractor(config);
  if (spectrum.size() != config.bins()) throw ConfigError("mfcc: input bin count does not match the filterbank");
  std::vector<double> out(static_cast<std::size_t>(config.n_mfcc));
  extractor.coefficients(spectrum, std::span<double>(out));
  return out;
}

}  // namespace operatrack
