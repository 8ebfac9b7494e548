#pragma once

#include <vector>

#include "heatdef/classical.hpp"
#include "heatdef/fourier_potential.hpp"
#include "heatdef/types.hpp"

namespace heatdef {

/// Closed-form harmonic heat kernel for d_t u = d_x^2 u - omega^2 x^2 u.
/// Validated in the test suite by its own PDE residual and by its
/// omega -> 0 limit against the free Gaussian.
double mehler_kernel(double omega, double t, double x, double y);

/// Free heat kernel (4 pi t)^{-1/2} exp(-(x-y)^2 / 4t), one dimension.
double free_heat_kernel(double t, double x, double y);

/// Uniform 1D grid with homogeneous Dirichlet walls at +-L.
struct Grid1D {
  double L = 12.0;
  int Nx = 2000;
  double dt = 1e-4;
  double dx() const { return 2.0 * L / (Nx + 1); }
};

std::vector<double> grid_points(const Grid1D& grid);

/// Crank-Nicolson (theta = 1/2) evolution of
///   d_t u = A(t)(d_x + B(t)x)^2 u - C(t) x^2 u + c(t, x) u
/// for nu = 1 models with real coefficients on the real time axis.
/// Second-order in dt and dx. Throws DivergedError if the norm grows by
/// more than e^10 over the run.
std::vector<Complex> cn_evolve(const CoefficientModel& model,
                               const FourierPotential& pot, const Grid1D& grid,
                               std::vector<Complex> u0, double t0, double t1);

/// Grid snapshot as CSV with columns x, re_u, im_u.
std::string snapshot_csv(const Grid1D& grid, const std::vector<Complex>& u);

/// Boundary-value solutions at selected rescaled times computed with an
/// adaptive Dormand-Prince 5(4) pass, independent of the fixed-step RK4
/// used by TrajectoryBundle.
struct OracleBvpValues {
  std::vector<CMatrix> q_flat;
  std::vector<CMatrix> q_sharp;
};
OracleBvpValues oracle_bvp(const ElCoefficients& coeffs, Complex t,
                           const std::vector<double>& sigmas,
                           double tol = 1e-12);

/// Brute-force evaluation of the order-n series term (n <= 2) by nested
/// adaptive Gauss-Kronrod integration with direct (non-interpolated)
/// quadrature of the deformation matrix at every point. Shares no numeric
/// kernels with the main path. Throws ToleranceNotMetError on failure.
CMatrix brute_force_vn(const FourierPotential& pot,
                       const CoefficientModel& model, int n, Complex t,
                       const CVector& x, const CVector& y,
                       double abs_tol = 1e-11);

}  // namespace heatdef
