#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace soilsim {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or malformed input (CLI maps this to exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid dataset (missing REF sample, missing group, ...).
class StructureError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// File parse failure; carries the 1-based line number when known.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : ConfigError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& msg) : ConfigError(msg), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Antenna switching schedule does not fit the frame or lacks usable pairs.
class ScheduleError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Numerical failures (CLI maps these to exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Inverted permittivity fell below the physical bound of 1.
class EpsilonOutOfRangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Wrapped-phase search produced no candidate in the requested range.
class NoCandidateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Model has a zero-norm direction or an unfittable calibration.
class DegenerateModelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Training loss became non-finite; carries the offending epoch.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& msg, std::size_t epoch)
      : NumericalError(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

} // namespace soilsim
