#pragma once

#include <vector>

#include "heatdef/matrix_poly.hpp"
#include "heatdef/types.hpp"

namespace heatdef {

/// One plane-wave mode: frequency xi in R^nu, matrix amplitude a(t) given as
/// a Taylor polynomial with d x d coefficients.
struct FourierMode {
  RVector xi;
  MatrixPolynomial amplitude;
};

/// c(t, x) = sum_m a_m(t) exp(i x . xi_m), a finite trigonometric potential
/// with matrix values. The finite mode list makes the moment condition
/// automatic and the series a finite mode sum.
struct FourierPotential {
  int d = 1;
  std::vector<FourierMode> modes;

  static FourierPotential zero(int d = 1);
  /// amplitude * cos(x . xi): modes (+xi, a/2) and (-xi, a/2).
  static FourierPotential cosine(double amplitude, const RVector& xi);
  /// Constant scalar-matrix potential: single mode with xi = 0.
  static FourierPotential constant(const CMatrix& a);

  bool is_zero() const { return modes.empty(); }
  int nu() const { return modes.empty() ? 0 : static_cast<int>(modes[0].xi.size()); }

  CMatrix eval(Complex t, const CVector& x) const;
  void validate(int expected_nu) const;
};

/// eval as a free function, mirroring the module operation list.
inline CMatrix eval_potential(const FourierPotential& pot, Complex t,
                              const CVector& x) {
  return pot.eval(t, x);
}

/// sum_m e^{R |xi_m|} sup_{|t| <= T} |a_m(t)|, an upper bound by
/// construction (circle sampling plus derivative correction).
double moment_bound(const FourierPotential& pot, double R, double T);

}  // namespace heatdef
