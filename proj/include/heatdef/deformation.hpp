#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "heatdef/classical.hpp"
#include "heatdef/quadrature.hpp"
#include "heatdef/types.hpp"

namespace heatdef {

struct DeformationOptions {
  int quadrature_order = 32;  // tau-quadrature nodes per pair
  int grid_nodes = 24;        // Chebyshev-Lobatto points per direction
  int bundle_steps = 256;
};

/// A point mass of the measure sum_j delta_{s_j} xi_j.
struct PointMass {
  double s;
  RVector xi;
};

/// Evaluator of the two-point deformation matrix
///   Ktil(s, s') = int_{s v s'}^1 q_flat_{t tau}(s / tau) A(t tau)
///                 q_flat_{t tau}(s' / tau)^T d tau,
/// precomputed on a Chebyshev grid over the triangle s <= s' (Duffy
/// coordinates sigma = s / s') and extended to the square by the transpose
/// symmetry Ktil(s, s')^T = Ktil(s', s). The tau integral runs through a
/// logarithmic substitution so that small s v s' keeps full accuracy.
/// Immutable after build; safe for concurrent reads.
class DeformationKernel {
 public:
  static DeformationKernel build(const CoefficientModel& model,
                                 const ElCoefficients& coeffs, Complex t,
                                 const DeformationOptions& options = {});

  Complex time() const { return t_; }
  int nu() const { return nu_; }
  int quadrature_order() const { return options_.quadrature_order; }
  int grid_nodes() const { return options_.grid_nodes; }
  const CoefficientModel& model() const { return coeffs_.model(); }
  const ElCoefficients& coeffs() const { return coeffs_; }

  /// Interpolated value anywhere on [0,1]^2.
  CMatrix eval(double s, double sp) const;
  /// Direct quadrature (no interpolation); bundle solves are memoized.
  CMatrix eval_direct(double s, double sp) const;

  /// Trajectory bundle at parameter targ, from the memoization cache
  /// (key: targ rounded to 12 significant digits).
  const TrajectoryBundle& bundle_at(Complex targ) const;

  /// Partial contraction of the interpolation table against the s'
  /// barycentric weights at sp; evaluating the result against sigma weights
  /// gives Ktil(sigma * sp, sp). Used by the series evaluator to make
  /// repeated lookups cheap. The _into variant reuses the caller's buffer.
  std::vector<CMatrix> contract_sp(double sp) const;
  void contract_sp_into(double sp, std::vector<CMatrix>& row) const;
  CMatrix eval_contracted(const std::vector<CMatrix>& row, double sigma) const;

  /// Grid dump (interpolated on a uniform n x n grid) as CSV with columns
  /// s, sp, then Re/Im of each entry.
  void dump_csv(std::ostream& out, int n = 33) const;

 private:
  DeformationKernel() = default;
  CMatrix quadrature_pair(double s, double sp) const;

  struct BundleCache {
    std::map<std::string, std::unique_ptr<TrajectoryBundle>> map;
    std::mutex mutex;
  };

  Complex t_;
  int nu_ = 0;
  DeformationOptions options_;
  ElCoefficients coeffs_;
  ChebyshevLobatto grid_;
  // values[i][j] = Ktil(sigma_i * sp_j, sp_j)
  std::vector<std::vector<CMatrix>> values_;

  mutable std::unique_ptr<BundleCache> cache_ = std::make_unique<BundleCache>();
};

inline DeformationKernel build_kernel(const CoefficientModel& model,
                                      const ElCoefficients& coeffs, Complex t,
                                      int quadrature_order = 32) {
  DeformationOptions options;
  options.quadrature_order = quadrature_order;
  return DeformationKernel::build(model, coeffs, t, options);
}

/// sum_{j,k} xi_j . Ktil(s_j, s_k) xi_k through the interpolation grid.
/// Throws BoundaryMassError if any s_j lies on {0, 1}.
Complex quadratic_form(const DeformationKernel& kernel,
                       std::span<const PointMass> masses);

/// The t = 0 limit sum_{j,k} s_{j^k}(1 - s_{jvk}) xi_j . A(0) xi_k.
double quadratic_form_zero(const RMatrix& a0, std::span<const PointMass> masses);

struct PropagatorReport {
  double max_ode_residual = 0.0;  // homogeneous equation away from s'
  double dirichlet0 = 0.0;
  double dirichlet1 = 0.0;
  double jump_error = 0.0;        // derivative jump vs -A(t s')
};

/// Distributional checks for the equation satisfied in s: homogeneous
/// residual off the diagonal (5-point FD on direct values), Dirichlet
/// boundary values, and the derivative jump across s = s' against -A(t s').
PropagatorReport propagator_residual(const DeformationKernel& kernel,
                                     double s_prime, int probes = 25,
                                     double fd_step = 2e-3);

struct PositivityReport {
  Complex form_t = 0.0;        // (mu, mu)_t
  double form_zero = 0.0;      // (mu, mu)_0
  double re_t_form = 0.0;      // Re(t (mu, mu)_t)
  double ratio_vs_zero = 0.0;  // |(mu,mu)_t| / (mu,mu)_0
  double ratio_vs_bound = 0.0; // |(mu,mu)_t| / (2 n |A(0)|_inf sum xi_j^2)
  bool degenerate_zero_form = false;
};

PositivityReport positivity_and_bounds(const DeformationKernel& kernel,
                                       std::span<const PointMass> masses);

/// Independent Green's-function construction from the two homogeneous
/// Dirichlet solutions by variation of parameters; used as a cross-check
/// of the quadrature construction.
CMatrix green_function_reference(const CoefficientModel& model,
                                 const TrajectoryBundle& bundle, double s,
                                 double s_prime);

}  // namespace heatdef
