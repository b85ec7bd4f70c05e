#pragma once

#include <stdexcept>
#include <string>

namespace ionwalk {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Fock-space state put significant weight on the top levels of the basis.
class TruncationOverflow : public Error {
 public:
  explicit TruncationOverflow(const std::string& what, double time = -1.0)
      : Error(what), time_(time) {}
  /// Simulation time (s) at which the guard tripped, or -1 outside propagation.
  double time() const { return time_; }

 private:
  double time_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: step underflow, non-convergent fit, bracket failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The trajectory never re-approaches the origin inside the search window.
class NoReturn : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ionwalk
