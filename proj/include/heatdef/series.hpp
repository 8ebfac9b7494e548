#pragma once

#include <span>
#include <vector>

#include "heatdef/classical.hpp"
#include "heatdef/deformation.hpp"
#include "heatdef/fourier_potential.hpp"
#include "heatdef/types.hpp"

namespace heatdef {

struct SeriesTerm {
  int order = 0;
  CMatrix value;                  // d x d
  int quadrature_order = 0;       // nodes per simplex dimension
  long long mode_tuple_count = 0;
};

struct KernelResult {
  Complex p0 = 0.0;
  std::vector<SeriesTerm> terms;
  CMatrix pconj;        // 1 + sum of computed terms
  double tail_bound = 0.0;
  CMatrix p;            // p0 * pconj
  int orders_used = 0;
};

struct SeriesOptions {
  int n_max = 6;
  int nodes_per_dim = 12;             // Q
  long long budget = 10'000'000;      // max M^n Q^n integrand evaluations
  double tol = 1e-8;                  // tail-bound early-stop threshold
  int bundle_steps = 256;
  int kernel_quadrature = 32;
  int kernel_grid = 24;
  int action_quadrature = 32;
};

/// One deformation-series term
///   v_n = t^n sum_{mode tuples} int_{0<s_1<...<s_n<1}
///         e^{i sum_j qnat(s_j).xi_j} e^{-t sum_{jk} xi_j.Ktil(s_j,s_k) xi_k}
///         a_{m_n}(s_n t) ... a_{m_1}(s_1 t) d^n s,
/// with nested Gauss-Legendre on the ordered simplex (outermost s_n on
/// [0,1], each inner s_j on [0, s_{j+1}]) and Ktil / qnat read from the
/// kernel interpolation grid. Amplitudes multiply in descending index
/// order; no symmetrization. Throws BudgetError if M^n Q^n > budget.
SeriesTerm eval_vn(const DeformationKernel& kernel,
                   const TrajectoryBundle& bundle, const FourierPotential& pot,
                   int n, Complex t, const CVector& x, const CVector& y, int Q,
                   long long budget = 10'000'000);

/// Same term at a batch of x values (one simplex sweep, shared kernel
/// tables; only the phase factor depends on x).
std::vector<CMatrix> eval_vn_batch(const DeformationKernel& kernel,
                                   const TrajectoryBundle& bundle,
                                   const FourierPotential& pot, int n,
                                   Complex t, std::span<const CVector> xs,
                                   const CVector& y, int Q,
                                   long long budget = 10'000'000);

/// Certified tail majorant sum_{n > n_max} (Ahat |t|)^n / n! with
/// Ahat = 2 moment_bound(pot, 2R, |t|), overflow-safe.
double truncation_bound(const FourierPotential& pot, double R, Complex t,
                        int n_max);

/// Shared per-t state: trajectory bundle, deformation kernel, action and
/// theta data. Lets batched evaluations reuse one build.
class KernelEvaluator {
 public:
  KernelEvaluator(const CoefficientModel& model, const FourierPotential& pot,
                  Complex t, const SeriesOptions& options = {});

  KernelResult eval(const CVector& x, const CVector& y) const;
  /// pconj at many x for fixed y (per-order batch sweep).
  std::vector<CMatrix> pconj_batch(std::span<const CVector> xs,
                                   const CVector& y, int n_max, int Q) const;
  Complex p0(const CVector& x, const CVector& y) const;

  const DeformationKernel& kernel() const { return kernel_; }
  const TrajectoryBundle& bundle() const { return bundle_; }
  Complex time() const { return t_; }

 private:
  const CoefficientModel* model_;
  const FourierPotential* pot_;
  Complex t_;
  SeriesOptions options_;
  ElCoefficients coeffs_;
  TrajectoryBundle bundle_;
  DeformationKernel kernel_;
  ActionEvaluator action_;
  Complex theta_integral_;
  Complex p0_prefactor_;
};

/// Full kernel evaluation p = p0 * pconj with certified tail bound, stopping
/// at the first order whose tail bound drops below options.tol.
KernelResult eval_kernel(const CoefficientModel& model,
                         const FourierPotential& pot, Complex t,
                         const CVector& x, const CVector& y,
                         const SeriesOptions& options = {});

/// Relative residual |d_t p - P0 p - c p| / (|P0 p| + |c p| + eps) by
/// 4th-order central finite differences at real t.
double pde_residual(const CoefficientModel& model, const FourierPotential& pot,
                    double t, const CVector& x, const CVector& y,
                    const SeriesOptions& options = {});

}  // namespace heatdef
