#pragma once

#include <stdexcept>
#include <string>

namespace convexa {

/// Bad input to an operation: dimension mismatch, out-of-domain parameter.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unreadable configuration (JSON specs, CLI flags).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested combination exists but is not computable by this library
/// (e.g. Monte-Carlo volume above the dimension cap, unknown density sup).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An oracle or solver failed to converge or hit a degenerate configuration.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long iterations = -1)
      : std::runtime_error(what), iterations_(iterations) {}

  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

}  // namespace convexa
