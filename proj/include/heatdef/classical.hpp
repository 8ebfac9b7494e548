#pragma once

#include <optional>
#include <vector>

#include "heatdef/coefficient_model.hpp"
#include "heatdef/types.hpp"

namespace heatdef {

/// Euler-Lagrange coefficients E = A' A^{-1} + 2A(B^T - B),
/// F = 4AC - 2AB', evaluated pointwise from the model polynomials.
class ElCoefficients {
 public:
  ElCoefficients() = default;
  explicit ElCoefficients(const CoefficientModel& model);

  CMatrix E(Complex t) const;
  CMatrix F(Complex t) const;
  const CoefficientModel& model() const { return model_; }

 private:
  CoefficientModel model_;
  MatrixPolynomial a_dot_, b_dot_;
};

inline ElCoefficients euler_lagrange_coeffs(const CoefficientModel& model) {
  return ElCoefficients(model);
}

/// Rescaled boundary-value solutions q_flat (0 -> 1) and q_sharp (1 -> 0) of
/// q'' = t E(ts) q' + t^2 F(ts) q on s in [0,1], solved by one shooting pass
/// with the fundamental solutions U, V and stored as RK4 node sequences with
/// cubic Hermite dense output. Immutable after construction.
class TrajectoryBundle {
 public:
  Complex time() const { return t_; }
  int steps() const { return steps_; }
  double conditioning() const { return conditioning_; }
  int nu() const { return static_cast<int>(flat_q_[0].rows()); }

  CMatrix q_flat(double s) const;
  CMatrix q_flat_dot(double s) const;
  CMatrix q_sharp(double s) const;
  CMatrix q_sharp_dot(double s) const;

  /// q_nat(s) = q_flat(s) x + q_sharp(s) y and its s-derivative.
  CVector qnat(double s, const CVector& x, const CVector& y) const;
  CVector qnat_dot(double s, const CVector& x, const CVector& y) const;

  /// Max norm of the ODE residual over interior nodes, measured with
  /// 4th-order finite differences on the stored node values. Converges at
  /// the same order as the integrator.
  double interior_residual(const ElCoefficients& coeffs) const;

  friend TrajectoryBundle solve_bvp(const ElCoefficients&, Complex, int);

 private:
  Complex t_;
  int steps_ = 0;
  double conditioning_ = 0.0;
  // node data: value, first and second s-derivative at s_k = k / steps
  std::vector<CMatrix> flat_q_, flat_qd_, flat_qdd_;
  std::vector<CMatrix> sharp_q_, sharp_qd_, sharp_qdd_;

  CMatrix hermite(const std::vector<CMatrix>& f, const std::vector<CMatrix>& fd,
                  double s) const;
};

/// Shooting solve. Throws FocalPointError when cond(V(1)) exceeds 1e8
/// (unique solvability lost; t outside the usable radius) and
/// OutOfRadiusError for |t| >= validity radius.
TrajectoryBundle solve_bvp(const ElCoefficients& coeffs, Complex t,
                           int steps = 256);

/// Spec-level helpers on top of the bundle.
CVector assemble_qnat(const TrajectoryBundle& bundle, const CVector& x,
                      const CVector& y, double s);
CVector assemble_qnat_dot(const TrajectoryBundle& bundle, const CVector& x,
                          const CVector& y, double s);

/// The action integral Phi(x, y, t) as an explicit quadratic form in (x, y):
/// Phi = z . M z with z = (x; y). Built once per t by Gauss-Legendre
/// integration of the rescaled Lagrangian along the trajectory bundle.
class ActionEvaluator {
 public:
  ActionEvaluator(const CoefficientModel& model, const TrajectoryBundle& bundle,
                  int quad_nodes = 32);

  Complex phi(const CVector& x, const CVector& y) const;
  CVector grad_x_phi(const CVector& x, const CVector& y) const;
  /// Hessian of Phi in x (constant: Phi is an exact quadratic).
  CMatrix hessian_xx() const;
  Complex time() const { return t_; }
  const CMatrix& form_matrix() const { return form_; }

 private:
  Complex t_;
  int nu_;
  CMatrix form_;  // 2nu x 2nu
};

/// theta(t) = -(1/t)(A(t) . Hess_x Phi - nu/2) + gamma(t), with
/// gamma = Tr(A B). Analytic at 0 but with a removable 1/t cancellation;
/// below epsilon = 1e-3 * radius the value is extrapolated quadratically
/// from 2, 4, 8 epsilon along the ray of t.
class ThetaEvaluator {
 public:
  ThetaEvaluator(const CoefficientModel& model, const ElCoefficients& coeffs,
                 int bundle_steps = 256, int quad_nodes = 32);

  Complex gamma(Complex t) const;
  Complex operator()(Complex t, bool allow_extrapolation = true) const;
  /// t^2 int_0^1 theta(t s) ds by 16-node Gauss-Legendre in s.
  Complex integral(Complex t, int gl_nodes = 16) const;
  double epsilon() const { return epsilon_; }

 private:
  Complex direct(Complex t) const;
  const CoefficientModel* model_;
  const ElCoefficients* coeffs_;
  int bundle_steps_, quad_nodes_;
  double epsilon_;
};

struct ActionResult {
  Complex phi = 0.0;
  Complex psi = 0.0;            // (Phi - (1/4) A^{-1}(0).(x-y)^2) / t
  Complex phi0 = 0.0;           // phase entering p0
  Complex theta_integral = 0.0; // t^2 int_0^1 theta(ts) ds
};

/// Full action data at one (t, x, y).
ActionResult action_phi(const CoefficientModel& model,
                        const ElCoefficients& coeffs,
                        const TrajectoryBundle& bundle, const CVector& x,
                        const CVector& y, int quad_nodes = 32);

/// gamma(t) and theta(t) as a pair, mirroring the operation list.
std::pair<Complex, Complex> gamma_theta(const CoefficientModel& model,
                                        const ElCoefficients& coeffs, Complex t,
                                        bool allow_extrapolation = true);

/// p0 = (4 pi Delta t)^{-nu/2} exp(-Phi0 / t), Delta = det A(0), with the
/// principal branch for the fractional power. Requires Re t >= 0, t != 0.
Complex p0_eval(const CoefficientModel& model, const ActionResult& action,
                Complex t, const CVector& x, const CVector& y);

/// Convenience: build bundle + action and evaluate p0 in one call.
Complex p0_value(const CoefficientModel& model, const ElCoefficients& coeffs,
                 Complex t, const CVector& x, const CVector& y,
                 int steps = 256);

/// |d_t S + H(x, grad_x S)| with S = Phi / t, by central finite differences
/// (relative step 1e-5). Contract: < 1e-6 for the smooth builtins.
double eikonal_residual(const CoefficientModel& model,
                        const ElCoefficients& coeffs, double t,
                        const CVector& x, const CVector& y,
                        double rel_step = 1e-5);

struct ClassicalIdentityReport {
  double grad_log_p0 = 0.0;   // gradient/momentum identity for p0
  double transport = 0.0;     // transport identity for the trajectory
  double symplectic = 0.0;    // sup-variation of q^T p - p^T q along s
};

/// Finite-difference residuals of the three classical identities at real
/// positive t.
ClassicalIdentityReport classical_identity_residuals(
    const CoefficientModel& model, const ElCoefficients& coeffs, double t,
    const CVector& x, const CVector& y);

/// Sup-variation of q^T p - p^T q along the flat trajectory (in rescaled
/// time), also used on its own by the verification suite.
double symplectic_variation(const CoefficientModel& model,
                            const ElCoefficients& coeffs,
                            const TrajectoryBundle& bundle);

}  // namespace heatdef
