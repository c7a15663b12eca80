#pragma once

#include <stdexcept>
#include <string>

namespace medsurv {

/// Malformed configuration (bad JSON, missing key, invalid value). CLI exit code 2.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Invalid input data (CSV schema violations, broken invariants). CLI exit code 3.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Numerical failure (non-convergence, degenerate likelihood, infeasible grid). CLI exit code 4.
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace medsurv
