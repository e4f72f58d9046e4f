#pragma once

#include <stdexcept>
#include <string>

namespace vfloc {

// Exit-code map: 0 ok, 2 config, 3 io, 4 protocol, 5 empty result.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
  static constexpr int exit_code = 2;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
  static constexpr int exit_code = 3;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
  static constexpr int exit_code = 4;
};

struct EmptyResultError : std::runtime_error {
  using std::runtime_error::runtime_error;
  static constexpr int exit_code = 5;
};

struct ValidationError : ConfigError {
  using ConfigError::ConfigError;
};

struct DiffParseError : ConfigError {
  using ConfigError::ConfigError;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return IoError::exit_code;
  if (dynamic_cast<const ProtocolError*>(&e)) return ProtocolError::exit_code;
  if (dynamic_cast<const EmptyResultError*>(&e)) return EmptyResultError::exit_code;
  if (dynamic_cast<const ConfigError*>(&e)) return ConfigError::exit_code;
  return 1;
}

}  // namespace vfloc
