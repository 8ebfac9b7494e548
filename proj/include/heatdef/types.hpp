#pragma once

#include <complex>
#include <Eigen/Dense>

namespace heatdef {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

/// Operator 2-norm (largest singular value). This is the matrix norm used
/// throughout: submultiplicative and equal to 1 on the identity.
inline double operator_norm(const CMatrix& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  return m.jacobiSvd().singularValues()(0);
}

/// Principal fractional power z^a, branch cut on the negative real axis.
/// Coincides with the half-plane convention |z|^a e^{i a arg z} for
/// arg z in [-pi/2, pi/2].
inline Complex principal_power(Complex z, double a) {
  return std::exp(a * std::log(z));
}

/// Bilinear dot product u.v = sum u_i v_i (no conjugation).
inline Complex bilinear_dot(const CVector& u, const CVector& v) {
  return (u.transpose() * v)(0, 0);
}

/// Euclidean length |x| = sqrt(sum x_i conj(x_i)).
inline double vec_abs(const CVector& x) { return x.norm(); }

}  // namespace heatdef
