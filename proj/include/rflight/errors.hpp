#pragma once

#include <stdexcept>
#include <string>

namespace rflight {

/// Invalid configuration, schema violation or failed assumption check.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the admissible domain (r outside D, bad band, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-convergence, step underflow, non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// L = 0 infall into a singular origin with unbounded speed.
class SingularInfallError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Hazard target not reached within t_max (particle loitering where v ~ 0).
class SlowRegionError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace rflight
