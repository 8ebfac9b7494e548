#pragma once

#include <vector>

#include "heatdef/types.hpp"

namespace heatdef {

/// Finite Taylor polynomial sum_k g_k t^k with complex matrix coefficients.
/// This is the only representation of analytic coefficient functions, which
/// keeps analyticity and axis-reality decidable.
class MatrixPolynomial {
 public:
  MatrixPolynomial() = default;
  explicit MatrixPolynomial(std::vector<CMatrix> coeffs);

  static MatrixPolynomial constant(const CMatrix& value);
  static MatrixPolynomial zero(Eigen::Index rows, Eigen::Index cols);

  CMatrix operator()(Complex t) const;  // Horner evaluation
  MatrixPolynomial derivative() const;

  const std::vector<CMatrix>& coefficients() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  Eigen::Index rows() const;
  Eigen::Index cols() const;

  /// Upper bound for sup_{|t| <= T} |g(t)| in operator norm: the maximum over
  /// a sampled circle plus a derivative-based correction covering the gaps.
  double sup_on_disk(double T, int samples = 64) const;

  /// True iff g restricted to the imaginary axis is real-valued, i.e.
  /// i^k g_k is a real matrix for every k (up to tol).
  bool real_on_imaginary_axis(double tol = 1e-12) const;

 private:
  std::vector<CMatrix> coeffs_;  // coeffs_[k] multiplies t^k
};

}  // namespace heatdef
