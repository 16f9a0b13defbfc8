#pragma once

#include <stdexcept>
#include <string>

namespace magnet {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: shapes, indices, files, parameter domains.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: loss of positive definiteness, step-size collapse,
/// degenerate regressions.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace magnet
