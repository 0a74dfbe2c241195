#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rf {

/// Base of every error raised by the library. Each subclass names the
/// failure category a caller is expected to handle differently.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not line up for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is unknown, out of range or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data is inconsistent (labels out of range, incomplete logs, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A ratio was requested with a zero denominator.
class DivisionError : public Error {
 public:
  using Error::Error;
};

/// A file does not follow its binary or text format.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_ = 0;
};

/// Optimisation diverged (non-finite loss or gradient).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace rf
