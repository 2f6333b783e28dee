#ifndef RINC_ERROR_HPP
#define RINC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rinc {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or truncated external data (files, bitstreams).
struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Invalid configuration (bad dimensions, incompatible parameters).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Input that is syntactically fine but semantically unusable
/// (degenerate point, empty cloud where one is required, ...).
struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

/// Failure while writing output.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace rinc

#endif  // RINC_ERROR_HPP
