#include "heatdef/fourier_potential.hpp"

#include <cmath>

#include "heatdef/errors.hpp"

namespace heatdef {

FourierPotential FourierPotential::zero(int d) {
  FourierPotential p;
  p.d = d;
  return p;
}

FourierPotential FourierPotential::cosine(double amplitude, const RVector& xi) {
  FourierPotential p;
  p.d = 1;
  CMatrix half(1, 1);
  half(0, 0) = Complex(0.5 * amplitude, 0.0);
  p.modes.push_back({xi, MatrixPolynomial::constant(half)});
  p.modes.push_back({-xi, MatrixPolynomial::constant(half)});
  return p;
}

FourierPotential FourierPotential::constant(const CMatrix& a) {
  FourierPotential p;
  p.d = static_cast<int>(a.rows());
  RVector xi = RVector::Zero(1);
  p.modes.push_back({xi, MatrixPolynomial::constant(a)});
  return p;
}

CMatrix FourierPotential::eval(Complex t, const CVector& x) const {
  CMatrix acc = CMatrix::Zero(d, d);
  for (const auto& mode : modes) {
    Complex phase = bilinear_dot(x, mode.xi.cast<Complex>());
    acc += mode.amplitude(t) * std::exp(Complex(0.0, 1.0) * phase);
  }
  return acc;
}

void FourierPotential::validate(int expected_nu) const {
  if (d < 1) throw ParseError("FourierPotential: d must be positive");
  for (const auto& mode : modes) {
    if (mode.xi.size() != expected_nu)
      throw ParseError("FourierPotential: mode frequency dimension mismatch");
    if (mode.amplitude.rows() != d || mode.amplitude.cols() != d)
      throw ParseError("FourierPotential: amplitude shape mismatch with d");
  }
}

double moment_bound(const FourierPotential& pot, double R, double T) {
  double bound = 0.0;
  for (const auto& mode : pot.modes)
    bound += std::exp(R * mode.xi.norm()) * mode.amplitude.sup_on_disk(T);
  return bound;
}

}  // namespace heatdef
