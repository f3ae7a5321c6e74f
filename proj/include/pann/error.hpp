#pragma once

#include <stdexcept>
#include <string>

namespace pann {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes (config errors vs numerical failures).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class EmptyTrace : public Error {
 public:
  using Error::Error;
};

class MissingDerivatives : public Error {
 public:
  using Error::Error;
};

class SingularDiscretization : public NumericalError {
 public:
  SingularDiscretization(const std::string& what, double rcond)
      : NumericalError(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

class StepTooLarge : public NumericalError {
 public:
  StepTooLarge(const std::string& what, double max_dt)
      : NumericalError(what), max_dt_(max_dt) {}
  // Largest dt (exclusive) for which the Neumann bound applies.
  double max_dt() const noexcept { return max_dt_; }

 private:
  double max_dt_;
};

class NonFinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergentBound : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonPositiveBound : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace pann
