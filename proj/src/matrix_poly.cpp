#include "heatdef/matrix_poly.hpp"

#include <cmath>
#include <stdexcept>

namespace heatdef {

MatrixPolynomial::MatrixPolynomial(std::vector<CMatrix> coeffs)
    : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty())
    throw std::invalid_argument("MatrixPolynomial: empty coefficient list");
  for (const auto& c : coeffs_) {
    if (c.rows() != coeffs_[0].rows() || c.cols() != coeffs_[0].cols())
      throw std::invalid_argument("MatrixPolynomial: inconsistent shapes");
  }
}

MatrixPolynomial MatrixPolynomial::constant(const CMatrix& value) {
  return MatrixPolynomial({value});
}

MatrixPolynomial MatrixPolynomial::zero(Eigen::Index rows, Eigen::Index cols) {
  return MatrixPolynomial({CMatrix::Zero(rows, cols)});
}

CMatrix MatrixPolynomial::operator()(Complex t) const {
  CMatrix acc = coeffs_.back();
  for (auto it = coeffs_.rbegin() + 1; it != coeffs_.rend(); ++it)
    acc = acc * t + *it;
  return acc;
}

MatrixPolynomial MatrixPolynomial::derivative() const {
  if (coeffs_.size() == 1)
    return MatrixPolynomial::zero(rows(), cols());
  std::vector<CMatrix> d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k)
    d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return MatrixPolynomial(std::move(d));
}

Eigen::Index MatrixPolynomial::rows() const { return coeffs_[0].rows(); }
Eigen::Index MatrixPolynomial::cols() const { return coeffs_[0].cols(); }

double MatrixPolynomial::sup_on_disk(double T, int samples) const {
  // Max modulus is attained on |t| = T. Sample the circle; the derivative
  // bound sum_k k |g_k| T^{k-1} covers the arc between samples.
  double best = 0.0;
  for (int j = 0; j < samples; ++j) {
    double phi = 2.0 * M_PI * j / samples;
    best = std::max(best, operator_norm((*this)(T * Complex(std::cos(phi),
                                                            std::sin(phi)))));
  }
  double deriv_sup = 0.0;
  double Tk = 1.0;
  for (std::size_t k = 1; k < coeffs_.size(); ++k) {
    deriv_sup += static_cast<double>(k) * operator_norm(coeffs_[k]) * Tk;
    Tk *= T;
  }
  return best + (M_PI * T / samples) * deriv_sup;
}

bool MatrixPolynomial::real_on_imaginary_axis(double tol) const {
  const Complex i(0.0, 1.0);
  Complex ik(1.0, 0.0);
  for (const auto& c : coeffs_) {
    CMatrix rotated = ik * c;
    if (rotated.imag().cwiseAbs().maxCoeff() >
        tol * std::max(1.0, operator_norm(c)))
      return false;
    ik *= i;
  }
  return true;
}

}  // namespace heatdef
