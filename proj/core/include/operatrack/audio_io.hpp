#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace operatrack {

/// Mono audio, samples in [-1, 1].
class AudioBuffer {
 public:
  AudioBuffer() = default;
  AudioBuffer(std::vector<double> samples, int sample_rate_hz);

  std::span<const double> samples() const { return *samples_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  std::size_t size() const { return samples_ ? samples_->size() : 0; }
  bool empty() const { return size() == 0; }
  double duration_s() const { return static_cast<double>(size()) / sample_rate_hz_; }

  // Shared so that frame streams can outlive the buffer they came from.
  std::shared_ptr<const std::vector<double>> shared_samples() const { return samples_; }

  friend bool operator==(const AudioBuffer& a, const AudioBuffer& b);

 private:
  std::shared_ptr<const std::vector<double>> samples_ =
      std::make_shared<const std::vector<double>>();
  int sample_rate_hz_ = 1;
};

enum class WavEncoding { Pcm16, Float32 };

/// Reads 8/16/24/32-bit integer or 32/64-bit float PCM WAV, averaging channels to mono.
/// Throws AudioError (Unreadable, UnsupportedEncoding, EmptyAudio).
AudioBuffer load_audio(const std::filesystem::path& path);

void save_wav(const std::filesystem::path& path, const AudioBuffer& audio,
              WavEncoding encoding = WavEncoding::Float32);

/// Multi-channel writer used by tests to build stereo fixtures. Channels must have equal length.
void save_wav_channels(const std::filesystem::path& path,
                       const std::vector<std::vector<double>>& channels, int sample_rate_hz,
                       WavEncoding encoding = WavEncoding::Pcm16);

/// Windowed-sinc polyphase resampler (Kaiser window, cutoff at 0.95 of the lower Nyquist).
AudioBuffer resample(const AudioBuffer& audio, int target_sr_hz);

/// Number of input samples the resampler reads beyond the input position of an output sample.
std::size_t resampler_lookahead(int source_sr_hz, int target_sr_hz);

/// Fixed-size analysis frames over an audio buffer. Frame k starts at sample k * hop; the
/// last frame is zero-padded when samples remain past the last full frame.
class FrameStream {
 public:
  FrameStream(const AudioBuffer& audio, double window_ms, double hop_ms);

  std::size_t size() const { return count_; }
  std::size_t window_samples() const { return window_; }
  std::size_t hop_samples() const { return hop_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  double window_ms() const { return window_ms_; }
  double hop_ms() const { return hop_ms_; }

  /// Copies frame `index` into `out` (size window_samples()).
  void copy_frame(std::size_t index, std::span<double> out) const;
  std::vector<double> frame(std::size_t index) const;

  static std::size_t frame_count(std::size_t n_samples, std::size_t window, std::size_t hop);

 private:
  std::shared_ptr<const std::vector<double>> samples_;
  int sample_rate_hz_;
  double window_ms_;
  double hop_ms_;
  std::size_t window_;
  std::size_t hop_;
  std::size_t count_;
};

inline FrameStream frame(const AudioBuffer& audio, double window_ms = 20.0, double hop_ms = 10.0) {
  return FrameStream(audio, window_ms, hop_ms);
}

}  // namespace operatrack
