#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "operatrack/audio_io.hpp"

namespace operatrack {

enum class SpectrumKind { Spec, Lpc, TrueEnvelope };

std::string_view to_string(SpectrumKind kind);
/// Accepts "spec", "lpc", "te" (case-insensitive).
SpectrumKind parse_spectrum_kind(std::string_view text);

/// Parameters of one MFCC pipeline. Zero-valued derived fields (n_mels, lpc_order,
/// te_cepstral_order) select their defaults; use the resolved_*() accessors.
struct FeatureConfig {
  SpectrumKind kind = SpectrumKind::Spec;
  int sample_rate_hz = 44100;
  int n_mfcc = 100;
  int skip = 20;
  double window_ms = 20.0;
  double hop_ms = 10.0;
  int n_mels = 0;
  int lpc_order = 0;
  int te_cepstral_order = 0;
  double te_tol = 0.1;
  int te_max_iter = 200;

  /// Music-sensitive features of the baseline tracker: Spec, 44.1 kHz, 100 MFCCs after skipping 20.
  static FeatureConfig baseline();
  /// Speech-sensitive features: LPC envelope at 1.5 kHz, 25 MFCCs, no skip.
  static FeatureConfig recitative();

  int resolved_n_mels() const { return n_mels > 0 ? n_mels : n_mfcc + skip; }
  /// 2 + sr/1000 rounded (4 at 1500 Hz).
  int resolved_lpc_order() const;
  /// Lifter order equal to half a 100 Hz period in samples, limited to the bin count.
  int resolved_te_cepstral_order() const;
  std::size_t window_samples() const;
  std::size_t hop_samples() const;
  /// Next power of two >= max(window samples, 2 * n_mels).
  std::size_t fft_size() const;
  std::size_t bins() const { return fft_size() / 2 + 1; }

  /// Throws ConfigError when the configuration cannot be computed.
  void validate() const;
  /// Additionally requires sr/n_mfcc/skip to come from the grid-search value sets.
  void validate_grid_values() const;

  /// "LPC sr=1500 mfcc=25 skip=0"
  std::string summary() const;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

/// Per-frame feature vectors, row-major, one row per 10 ms hop.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dims, double hop_ms = 10.0);
  FeatureMatrix(std::size_t rows, std::size_t dims, double hop_ms, std::vector<float> values);

  std::size_t rows() const { return rows_; }
  std::size_t dims() const { return dims_; }
  double hop_ms() const { return hop_ms_; }
  bool empty() const { return rows_ == 0; }

  std::span<const float> row(std::size_t i) const { return {values_.data() + i * dims_, dims_}; }
  std::span<float> row(std::size_t i) { return {values_.data() + i * dims_, dims_}; }
  std::span<const float> values() const { return values_; }

  /// First `rows` rows.
  FeatureMatrix head(std::size_t rows) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dims_ = 0;
  double hop_ms_ = 10.0;
  std::vector<float> values_;
};

/// Periodic Hann window of the given length.
std::vector<double> hann_window(std::size_t length);

/// One-sided periodogram |X_k|^2 / L of the Hann-windowed frame (L = frame length),
/// zero-padded to fft_size; fft_size/2 + 1 bins.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_size);

/// All-pole model from the autocorrelation method. a[0] == 1 and A(z) = sum a[i] z^-i.
struct LpcModel {
  std::vector<double> a;
  std::vector<double> reflection;
  double error = 0.0;         // final prediction error energy E_p
  bool degenerate = false;    // silent / singular input
};

/// Levinson-Durbin on the raw (unwindowed) samples.
LpcModel lpc_coefficients(std::span<const double> samples, int order);

struct SpectralEnvelope {
  std::vector<double> values;
  bool flagged = false;    // LPC: degenerate frame; TE: not converged
  int iterations = 0;      // TE only
};

inline constexpr double kLpcFloor = 1e-12;

/// All-pole envelope E_p / (L |A(e^jw)|^2) of the Hann-windowed frame on the power_spectrum
/// bin grid. Silent frames give a flat kLpcFloor envelope with flagged set.
SpectralEnvelope lpc_envelope(std::span<const double> frame, int order, std::size_t fft_size);

/// True Envelope by iterated cepstral smoothing with max-update, in log amplitude.
/// Returns the power envelope exp(2 V).
SpectralEnvelope true_envelope(std::span<const double> spectrum, int cepstral_order, double tol,
                               int max_iter);

/// Cepstral low-pass of a log-amplitude curve sampled on fft bins (helper exposed for tests).
std::vector<double> cepstral_smooth(std::span<const double> log_amplitude, int cepstral_order);

/// Triangular mel filters, each row normalized to unit sum. Weights integrate the triangle
/// over each bin's frequency interval so narrow low-frequency filters keep support.
class MelFilterbank {
 public:
  MelFilterbank(int sample_rate_hz, std::size_t fft_size, int n_mels);

  int n_mels() const { return static_cast<int>(rows_.size()); }
  std::size_t bins() const { return bins_; }
  double center_hz(int m) const { return centers_[static_cast<std::size_t>(m)]; }

  /// Dense weight for filter m at bin k.
  double weight(int m, std::size_t k) const;
  void apply(std::span<const double> spectrum, std::span<double> mel_energies) const;

 private:
  struct Row {
    std::size_t first = 0;
    std::vector<double> weights;
  };
  std::size_t bins_;
  std::vector<Row> rows_;
  std::vector<double> centers_;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Orthonormal DCT-II and its inverse (DCT-III).
std::vector<double> dct2_orthonormal(std::span<const double> x);
std::vector<double> idct2_orthonormal(std::span<const double> coefficients);

inline constexpr double kMelLogFloor = 1e-10;

/// Streaming MFCC extractor for one configuration. Not thread-safe; create one per thread.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const FeatureConfig& config);
  ~FeatureExtractor();
  FeatureExtractor(FeatureExtractor&&) noexcept;
  FeatureExtractor& operator=(FeatureExtractor&&) noexcept;

  const FeatureConfig& config() const;

  /// Spectrum (or envelope) of one frame at the configured rate.
  std::vector<double> spectrum(std::span<const double> frame);
  /// log-mel + DCT-II; keeps coefficients [skip, skip + n_mfcc).
  void coefficients(std::span<const double> spectrum, std::span<float> out);
  void coefficients(std::span<const double> spectrum, std::span<double> out);
  /// spectrum() followed by coefficients().
  void process_frame(std::span<const double> frame, std::span<float> out);

  /// Resample, frame and extract every frame.
  FeatureMatrix extract(const AudioBuffer& audio);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience for a one-shot extraction.
FeatureMatrix extract_features(const AudioBuffer& audio, const FeatureConfig& config);

/// MFCC vector of one spectrum under `config` (input bins must match config.bins()).
std::vector<double> mfcc(std::span<const double> spectrum, const FeatureConfig& config);

/// Spectra (or envelopes) for every frame of audio already at config.sample_rate_hz.
/// Rows share the bin grid of `config`; reusable for any config with the same
/// kind, rate and fft_size.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;
  std::span<const double> frame(std::size_t i) const { return {values.data() + i * bins, bins}; }
};

Spectrogram compute_spectrogram(const AudioBuffer& audio_at_rate, const FeatureConfig& config);
FeatureMatrix mfcc_from_spectrogram(const Spectrogram& spectra, const FeatureConfig& config);

}  // namespace operatrack
