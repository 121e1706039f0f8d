#pragma once

#include <stdexcept>
#include <string>

namespace ringlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical result failed its own accuracy self-check.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

/// A fixed-point or root solver did not converge.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual)
      : Error(what + " (last residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Dense linear algebra failure (eigen/singular value iteration).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Markov chain failed to mix (acceptance collapsed).
class MixingError : public Error {
 public:
  using Error::Error;
};

/// Equilibrium problem outside the one-cut regime.
class UnsupportedRegimeError : public Error {
 public:
  UnsupportedRegimeError(const std::string& what, double lo, double hi)
      : Error(what), lo_(lo), hi_(hi) {}
  double interval_lo() const noexcept { return lo_; }
  double interval_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Caller violated an input precondition (empty input, bad config, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ringlab
