#pragma once

#include <stdexcept>
#include <string>

namespace rapdb {

// Malformed or inconsistent input data (dimensions, JSON, CSV).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid solver or policy configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data that violates a modelling assumption (non-PSD matrix, rank deficiency,
// degenerate kernel normalization).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A Slater candidate that is not strictly feasible for the cone constraint.
class SlaterViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The backtracking loop could not find an acceptable stepsize.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rapdb
