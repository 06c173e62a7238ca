#pragma once

#include <stdexcept>
#include <string>

namespace semvb {

/// Configuration / schema / flag validation problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or invariant-violating input data (CLI exit code 2).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failures inside a fit, with iteration context (CLI exit code 4).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace semvb
