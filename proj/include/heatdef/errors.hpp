#pragma once

#include <stdexcept>
#include <string>

namespace heatdef {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input file or configuration could not be parsed / is inconsistent.
struct ParseError : Error {
  using Error::Error;
};

/// Evaluation requested outside the trusted radius of the coefficient model.
struct OutOfRadiusError : Error {
  using Error::Error;
};

/// A(t) (or another required matrix) is numerically singular at an
/// evaluation point.
struct SingularCoefficientError : Error {
  using Error::Error;
};

/// The boundary-value problem lost unique solvability: V(1) is singular or
/// too ill-conditioned. Signals that t left the usable time radius.
struct FocalPointError : Error {
  FocalPointError(const std::string& msg, double cond)
      : Error(msg), conditioning(cond) {}
  double conditioning;
};

/// Direct small-t evaluation of theta would divide noise by noise.
struct CancellationAlarm : Error {
  using Error::Error;
};

/// A point mass was placed on the Dirichlet boundary s in {0,1}.
struct BoundaryMassError : Error {
  using Error::Error;
};

/// The requested series term would exceed the integrand-evaluation budget.
struct BudgetError : Error {
  using Error::Error;
};

/// Adaptive integrator could not reach the requested tolerance.
struct ToleranceNotMetError : Error {
  ToleranceNotMetError(const std::string& msg, double achieved_)
      : Error(msg), achieved(achieved_) {}
  double achieved;
};

/// Time-stepping blew up (norm growth beyond the instability threshold).
struct DivergedError : Error {
  using Error::Error;
};

/// Kernel evaluation requested at t = 0 where the prefactor is singular.
struct UndefinedAtZeroError : Error {
  using Error::Error;
};

}  // namespace heatdef
