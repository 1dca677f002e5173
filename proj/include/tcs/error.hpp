#pragma once

#include <stdexcept>
#include <string>

namespace tcs {

/// Base of every error raised by the toolkit. `kind()` is a stable short
/// identifier used for machine-readable CLI output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& message) : Error("geometry", message) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("format", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

class HashMismatchError : public Error {
 public:
  explicit HashMismatchError(const std::string& message) : Error("mask_hash_mismatch", message) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

}  // namespace tcs
