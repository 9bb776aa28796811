#include "operatrack/feature_io.hpp"

#include <cstdint>
#include <cstring>

#include "operatrack/csv.hpp"
#include "operatrack/error.hpp"

namespace operatrack {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  std::uint32_t raw;
  std::memcpy(&raw, &f, sizeof raw);
  put_u32(out, raw);
}

float get_f32(const std::string& in, std::size_t pos) {
  const std::uint32_t raw = get_u32(in, pos);
  float f;
  std::memcpy(&f, &raw, sizeof f);
  return f;
}

}  // namespace

std::string encode_feature_binary(const FeatureMatrix& m) {
  std::string out(kFeatureMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.dims()));
  put_f32(out, static_cast<float>(m.hop_ms()));
  for (float v : m.values()) put_f32(out, v);
  return out;
}

FeatureMatrix decode_feature_binary(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw DataError("not a feature matrix file (bad magic)");
  }
  const std::size_t rows = get_u32(bytes, 4);
  const std::size_t dims = get_u32(bytes, 8);
  const float hop = get_f32(bytes, 12);
  if (bytes.size() != 16 + 4 * rows * dims) throw DataError("feature matrix file has the wrong size");
  std::vector<float> values(rows * dims);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_f32(bytes, 16 + 4 * i);
  return FeatureMatrix(rows, dims, hop, std::move(values));
}

void write_feature_binary(const std::filesystem::path& path, const FeatureMatrix& m) {
  write_text_file(path, encode_feature_binary(m));
}

FeatureMatrix read_feature_binary(const std::filesystem::path& path) {
  return decode_feature_binary(read_text_file(path));
}

std::string feature_csv(const FeatureMatrix& m) {
  std::string out = "frame,time_s";
  for (std::size_t d = 0; d < m.dims(); ++d) out += ",c" + std::to_string(d);
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += std::to_string(r) + ',' + format_fixed(static_cast<double>(r) * m.hop_ms() / 1000.0, 3);
    for (float v : m.row(r)) out += ',' + format_exact(static_cast<double>(v));
    out += '\n';
  }
  return out;
}

}  // namespace operatrack
