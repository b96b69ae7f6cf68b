#pragma once

#include <stdexcept>
#include <string>

namespace rtn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested size is outside the supported range (e.g. k > k_max).
class UnsupportedSizeError : public Error {
 public:
  using Error::Error;
};

/// Parameters outside the domain of a formula (e.g. chi too large for the chain).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Gram matrix is singular for q < k; the Weingarten matrix does not exist there.
class RegimeError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes do not match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A contraction or state would exceed the configured memory budget.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double required_mb, double budget_mb)
      : Error(what), required_mb_(required_mb), budget_mb_(budget_mb) {}
  double required_mb() const { return required_mb_; }
  double budget_mb() const { return budget_mb_; }

 private:
  double required_mb_;
  double budget_mb_;
};

/// Quadrature failed to reach the requested tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what + " (achieved tolerance " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved_tolerance() const { return achieved_; }

 private:
  double achieved_;
};

/// Invalid input that is not covered by a more specific error.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace rtn
