#pragma once

#include <stdexcept>
#include <string>

namespace krf {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Required input file missing or unreadable (CLI exit code 3).
class MissingInputError : public Error {
 public:
  using Error::Error;
};

/// Any failure of the numerics (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateGridError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateMetricError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DimensionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IntegratorError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NormalizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ResolutionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace krf
