#include "operatrack/audio_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "operatrack/error.hpp"

namespace operatrack {

AudioBuffer::AudioBuffer(std::vector<double> samples, int sample_rate_hz)
    : sample_rate_hz_(sample_rate_hz) {
  if (sample_rate_hz <= 0) {
    throw ConfigError("sample rate must be positive, got " + std::to_string(sample_rate_hz));
  }
  for (double& s : samples) {
    if (!std::isfinite(s)) throw DataError("audio contains non-finite samples");
    s = std::clamp(s, -1.0, 1.0);
  }
  samples_ = std::make_shared<const std::vector<double>>(std::move(samples));
}

bool operator==(const AudioBuffer& a, const AudioBuffer& b) {
  return a.sample_rate_hz_ == b.sample_rate_hz_ && *a.samples_ == *b.samples_;
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

double decode_sample(const unsigned char* p, std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatPcm) {
    switch (bits) {
      case 8:
        return (static_cast<int>(p[0]) - 128) / 128.0;
      case 16:
        return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      case 24: {
        std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (v & 0x800000) v |= ~0xFFFFFF;
        return v / 8388608.0;
      }
      case 32:
        return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
    }
  } else if (format == kFormatFloat) {
    if (bits == 32) {
      std::uint32_t raw = read_u32(p);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      return f;
    }
    if (bits == 64) {
      std::uint64_t raw = static_cast<std::uint64_t>(read_u32(p)) |
                          (static_cast<std::uint64_t>(read_u32(p + 4)) << 32);
      double d;
      std::memcpy(&d, &raw, sizeof d);
      return d;
    }
  }
  return 0.0;
}

bool supported(std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatPcm) return bits == 8 || bits == 16 || bits == 24 || bits == 32;
  if (format == kFormatFloat) return bits == 32 || bits == 64;
  return false;
}

}  // namespace

AudioBuffer load_audio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError(AudioError::Kind::Unreadable, "cannot open audio file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw AudioError(AudioError::Kind::EmptyAudio, "empty audio: " + path.string());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw AudioError(AudioError::Kind::Unreadable, "not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw AudioError(AudioError::Kind::Unreadable, "truncated fmt chunk");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible && available >= 26) format = read_u16(chunk + 32);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt || data == nullptr) {
    throw AudioError(AudioError::Kind::Unreadable, "missing fmt or data chunk: " + path.string());
  }
  if (!supported(format, bits) || channels == 0 || rate == 0) {
    throw AudioError(AudioError::Kind::UnsupportedEncoding,
                     "unsupported WAV encoding (format " + std::to_string(format) + ", " +
                         std::to_string(bits) + " bits): " + path.string());
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n = data_size / frame_bytes;
  if (n == 0) throw AudioError(AudioError::Kind::EmptyAudio, "empty audio: " + path.string());

  std::vector<double> mono(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      sum += decode_sample(data + i * frame_bytes + c * bytes_per_sample, format, bits);
    }
    double v = sum / channels;
    if (!std::isfinite(v)) {
      throw AudioError(AudioError::Kind::UnsupportedEncoding, "non-finite sample in " + path.string());
    }
    mono[i] = v;
  }
  return AudioBuffer(std::move(mono), static_cast<int>(rate));
}

void save_wav_channels(const std::filesystem::path& path,
                       const std::vector<std::vector<double>>& channels, int sample_rate_hz,
                       WavEncoding encoding) {
  if (channels.empty()) throw ConfigError("save_wav: no channels");
  const std::size_t n = channels.front().size();
  for (const auto& c : channels) {
    if (c.size() != n) throw ConfigError("save_wav: channel length mismatch");
  }
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat;
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(n * n_ch * (bits / 8));

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, n_ch);
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * n_ch * (bits / 8));
  put_u16(out, static_cast<std::uint16_t>(n_ch * (bits / 8)));
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_bytes);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& c : channels) {
      double v = std::clamp(c[i], -1.0, 1.0);
      if (encoding == WavEncoding::Pcm16) {
        auto q = static_cast<std::int16_t>(std::lround(std::clamp(v * 32768.0, -32768.0, 32767.0)));
        put_u16(out, static_cast<std::uint16_t>(q));
      } else {
        float f = static_cast<float>(v);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        put_u32(out, raw);
      }
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void save_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding) {
  std::vector<std::vector<double>> ch{std::vector<double>(audio.samples().begin(), audio.samples().end())};
  save_wav_channels(path, ch, audio.sample_rate_hz(), encoding);
}

FrameStream::FrameStream(const AudioBuffer& audio, double window_ms, double hop_ms)
    : samples_(audio.shared_samples()),
      sample_rate_hz_(audio.sample_rate_hz()),
      window_ms_(window_ms),
      hop_ms_(hop_ms) {
  if (!(hop_ms > 0.0) || !(window_ms >= hop_ms)) {
    throw ConfigError("framing requires window_ms >= hop_ms > 0");
  }
  const double w = window_ms * sample_rate_hz_ / 1000.0;
  const double h = hop_ms * sample_rate_hz_ / 1000.0;
  if (std::lround(w) < 1 || std::lround(h) < 1) {
    throw ConfigError("window shorter than one sample at " + std::to_string(sample_rate_hz_) + " Hz");
  }
  window_ = static_cast<std::size_t>(std::lround(w));
  hop_ = static_cast<std::size_t>(std::lround(h));
  count_ = frame_count(samples_->size(), window_, hop_);
}

std::size_t FrameStream::frame_count(std::size_t n, std::size_t window, std::size_t hop) {
  if (n <= window) return 1;
  std::size_t full = (n - window) / hop + 1;
  return (n - window) % hop != 0 ? full + 1 : full;
}

void FrameStream::copy_frame(std::size_t index, std::span<double> out) const {
  const auto& s = *samples_;
  const std::size_t start = index * hop_;
  const std::size_t avail = start < s.size() ? std::min(window_, s.size() - start) : 0;
  std::copy_n(s.begin() + static_cast<std::ptrdiff_t>(std::min(start, s.size())), avail, out.begin());
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(avail), out.begin() + static_cast<std::ptrdiff_t>(window_), 0.0);
}

std::vector<double> FrameStream::frame(std::size_t index) const {
  std::vector<double> out(window_);
  copy_frame(index, out);
  return out;
}

}  // namespace operatrack
