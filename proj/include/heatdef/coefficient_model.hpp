#pragma once

#include <string>
#include <vector>

#include "heatdef/matrix_poly.hpp"
#include "heatdef/types.hpp"

namespace heatdef {

/// The quadratic operator A(t).(d_x + B(t)x)^2 - C(t).x(x)x, with A, B, C
/// given as finite matrix Taylor polynomials trusted inside validity_radius.
struct CoefficientModel {
  int nu = 1;
  MatrixPolynomial A, B, C;
  double validity_radius = 1.0;
  std::string name = "custom";

  static CoefficientModel free_model(int nu = 1);
  /// A = 1, B = 0, C = lambda * 1 (autonomous harmonic well for lambda > 0).
  static CoefficientModel harmonic(double lambda, int nu = 1);
  /// A = 1, C = 0, B = -(i/2) beta with beta real skew-symmetric.
  static CoefficientModel magnetic(const RMatrix& beta);
  static CoefficientModel custom(int nu, MatrixPolynomial A, MatrixPolynomial B,
                                 MatrixPolynomial C, double validity_radius,
                                 std::string name = "custom");

  /// Structural hypotheses: square shapes, A and C symmetric at sample
  /// points, A(0) real symmetric positive definite. Throws ParseError.
  void validate() const;
};

struct Coefficients {
  CMatrix A, B, C;
};

/// A(t), B(t), C(t) at a point. Throws OutOfRadiusError for |t| >= radius.
Coefficients eval_coefficients(const CoefficientModel& model, Complex t);

struct RealityReport {
  bool passed = true;
  struct Offender {
    char which;       // 'A', 'B' (meaning iB), or 'C'
    int order;        // Taylor order k
    double imag_norm; // size of the non-real part of the rotated coefficient
  };
  std::vector<Offender> offenders;
};

/// Checks that A, iB and C are real-valued on the imaginary axis, which for
/// Taylor data is equivalent to i^k A_k, i^{k+1} B_k, i^k C_k real for all k.
RealityReport check_reality(const CoefficientModel& model);

}  // namespace heatdef
