#ifndef NSFDE_ERRORS_HPP
#define NSFDE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nsfde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative time, Mg >= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Vector lengths that do not match the number of spectral modes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent run configuration. `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Failures of the time integration itself. Mapped to exit status 2 by the CLI.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class BlowupError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonconvergenceError : public NumericalError {
 public:
  NonconvergenceError(const std::string& message, double residual)
      : NumericalError(message), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace nsfde

#endif  // NSFDE_ERRORS_HPP
