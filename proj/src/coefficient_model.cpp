#include "heatdef/coefficient_model.hpp"

#include <cmath>

#include "heatdef/errors.hpp"

namespace heatdef {

CoefficientModel CoefficientModel::free_model(int nu) {
  CoefficientModel m;
  m.nu = nu;
  m.A = MatrixPolynomial::constant(identity(nu));
  m.B = MatrixPolynomial::zero(nu, nu);
  m.C = MatrixPolynomial::zero(nu, nu);
  m.name = "free";
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::harmonic(double lambda, int nu) {
  CoefficientModel m;
  m.nu = nu;
  m.A = MatrixPolynomial::constant(identity(nu));
  m.B = MatrixPolynomial::zero(nu, nu);
  m.C = MatrixPolynomial::constant(lambda * identity(nu));
  m.name = "harmonic";
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::magnetic(const RMatrix& beta) {
  if (beta.rows() != beta.cols())
    throw ParseError("magnetic: beta must be square");
  if ((beta + beta.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ParseError("magnetic: beta must be skew-symmetric");
  const int nu = static_cast<int>(beta.rows());
  CoefficientModel m;
  m.nu = nu;
  m.A = MatrixPolynomial::constant(identity(nu));
  m.B = MatrixPolynomial::constant(Complex(0.0, -0.5) *
                                   beta.cast<Complex>());
  m.C = MatrixPolynomial::zero(nu, nu);
  m.name = "magnetic";
  m.validate();
  return m;
}

CoefficientModel CoefficientModel::custom(int nu, MatrixPolynomial A,
                                          MatrixPolynomial B,
                                          MatrixPolynomial C,
                                          double validity_radius,
                                          std::string name) {
  CoefficientModel m;
  m.nu = nu;
  m.A = std::move(A);
  m.B = std::move(B);
  m.C = std::move(C);
  m.validity_radius = validity_radius;
  m.name = std::move(name);
  m.validate();
  return m;
}

void CoefficientModel::validate() const {
  if (nu < 1) throw ParseError("CoefficientModel: nu must be positive");
  if (validity_radius <= 0.0)
    throw ParseError("CoefficientModel: validity_radius must be positive");
  for (const MatrixPolynomial* p : {&A, &B, &C}) {
    if (p->rows() != nu || p->cols() != nu)
      throw ParseError("CoefficientModel: coefficient shape mismatch with nu");
  }
  // Symmetry of A and C, checked at sample points inside the radius.
  for (double frac : {0.0, 0.3, 0.7}) {
    for (double arg : {0.0, 1.0, 2.5}) {
      Complex t = frac * validity_radius * Complex(std::cos(arg), std::sin(arg));
      CMatrix At = A(t), Ct = C(t);
      double scale_a = std::max(1.0, operator_norm(At));
      double scale_c = std::max(1.0, operator_norm(Ct));
      if ((At - At.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale_a)
        throw ParseError("CoefficientModel: A(t) not symmetric");
      if ((Ct - Ct.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale_c)
        throw ParseError("CoefficientModel: C(t) not symmetric");
    }
  }
  CMatrix A0 = A(Complex(0.0, 0.0));
  if (A0.imag().cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, operator_norm(A0)))
    throw ParseError("CoefficientModel: A(0) must be real");
  Eigen::SelfAdjointEigenSolver<RMatrix> es(A0.real());
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw ParseError("CoefficientModel: A(0) must be positive definite");
}

Coefficients eval_coefficients(const CoefficientModel& model, Complex t) {
  if (std::abs(t) >= model.validity_radius)
    throw OutOfRadiusError("eval_coefficients: |t| >= validity radius");
  return Coefficients{model.A(t), model.B(t), model.C(t)};
}

namespace {

void collect_offenders(const MatrixPolynomial& g, char tag, int extra_rot,
                       RealityReport& report) {
  const Complex i(0.0, 1.0);
  Complex rot = (extra_rot == 1) ? i : Complex(1.0, 0.0);
  for (int k = 0; k <= g.degree(); ++k) {
    CMatrix rotated = rot * g.coefficients()[k];
    double imag_norm = rotated.imag().cwiseAbs().maxCoeff();
    double scale = std::max(1.0, operator_norm(g.coefficients()[k]));
    if (imag_norm > 1e-12 * scale) {
      report.passed = false;
      report.offenders.push_back({tag, k, imag_norm});
    }
    rot *= i;
  }
}

}  // namespace

RealityReport check_reality(const CoefficientModel& model) {
  RealityReport report;
  collect_offenders(model.A, 'A', 0, report);
  collect_offenders(model.B, 'B', 1, report);  // criterion applies to iB
  collect_offenders(model.C, 'C', 0, report);
  return report;
}

}  // namespace heatdef
