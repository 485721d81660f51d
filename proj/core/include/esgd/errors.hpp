#pragma once

#include <stdexcept>
#include <string>

namespace esgd {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad arguments, violated preconditions, invalid configuration values.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Configuration file problems: unknown keys, wrong types, out-of-range values.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// A file exists but its contents do not follow the declared format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Two inputs that must agree (e.g. image and label counts) do not.
class ConsistencyError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Filesystem and stream failures: missing files, truncation, write errors.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Parameters became non-finite during an optimization or sampling run.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step) : Error(what), step(step) {}
  long step = 0;
};

/// Numerical failure inside a solver (singular system, non-convergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A quadrature grid does not capture enough of the integrand's mass.
class CoverageError : public NumericError {
 public:
  CoverageError(const std::string& what, double tail_fraction)
      : NumericError(what), tail_fraction(tail_fraction) {}
  double tail_fraction = 0.0;
};

/// The scope calibration heuristic found no value inside the target band.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// Request exceeds a hard resource cap (e.g. dense Hessian dimension).
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace esgd
