#pragma once

#include <filesystem>
#include <string>

#include "operatrack/features.hpp"

namespace operatrack {

// Binary layout, little-endian:
//   bytes 0-3   magic "OTFM"
//   bytes 4-7   uint32 rows
//   bytes 8-11  uint32 dims
//   bytes 12-15 float32 hop_ms
//   then rows*dims float32 values, row-major
inline constexpr char kFeatureMagic[4] = {'O', 'T', 'F', 'M'};

std::string encode_feature_binary(const FeatureMatrix& m);
FeatureMatrix decode_feature_binary(const std::string& bytes);

void write_feature_binary(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_feature_binary(const std::filesystem::path& path);

/// Debug CSV: header "frame,time_s,c0,...,c{dims-1}".
std::string feature_csv(const FeatureMatrix& m);

}  // namespace operatrack
