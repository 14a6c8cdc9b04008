#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace imem {

/// Base of every exception the library throws. `kind()` is a stable
/// snake_case tag suitable for machine-readable error reporting.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class WidthMismatch : public Error {
 public:
  WidthMismatch(std::size_t expected, std::size_t actual)
      : Error("width_mismatch", "signal width mismatch: expected " +
                                    std::to_string(expected) + ", got " +
                                    std::to_string(actual)) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("invalid_argument", message) {}
};

}  // namespace imem
