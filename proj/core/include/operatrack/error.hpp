#pragma once

#include <stdexcept>
#include <string>

namespace operatrack {

/// Invalid parameters or configuration. Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unusable input data. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AudioError : public DataError {
 public:
  enum class Kind { Unreadable, UnsupportedEncoding, EmptyAudio };

  AudioError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace operatrack
