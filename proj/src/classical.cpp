#include "heatdef/classical.hpp"

#include <cmath>

#include "heatdef/errors.hpp"
#include "heatdef/quadrature.hpp"

namespace heatdef {

namespace {

CMatrix invert_or_throw(const CMatrix& m, const char* what) {
  Eigen::FullPivLU<CMatrix> lu(m);
  if (!lu.isInvertible())
    throw SingularCoefficientError(std::string(what) +
                                   ": matrix numerically singular");
  return lu.inverse();
}

}  // namespace

ElCoefficients::ElCoefficients(const CoefficientModel& model)
    : model_(model), a_dot_(model.A.derivative()), b_dot_(model.B.derivative()) {}

CMatrix ElCoefficients::E(Complex t) const {
  CMatrix a = model_.A(t);
  CMatrix b = model_.B(t);
  CMatrix a_inv = invert_or_throw(a, "ElCoefficients::E");
  return a_dot_(t) * a_inv + 2.0 * a * (b.transpose() - b);
}

CMatrix ElCoefficients::F(Complex t) const {
  CMatrix a = model_.A(t);
  return 4.0 * a * model_.C(t) - 2.0 * a * b_dot_(t);
}

// ---------------------------------------------------------------------------
// Boundary-value solve
// ---------------------------------------------------------------------------

TrajectoryBundle solve_bvp(const ElCoefficients& coeffs, Complex t, int steps) {
  const CoefficientModel& model = coeffs.model();
  if (std::abs(t) >= model.validity_radius)
    throw OutOfRadiusError("solve_bvp: |t| >= validity radius");
  if (steps < 16) throw Error("solve_bvp: steps must be >= 16");

  const int nu = model.nu;
  const double h = 1.0 / steps;

  // E, F at all RK4 stage points s = k / (2 steps).
  std::vector<CMatrix> Es(2 * steps + 1), Fs(2 * steps + 1);
  for (int k = 0; k <= 2 * steps; ++k) {
    Complex ts = t * (0.5 * h * k);
    Es[k] = t * coeffs.E(ts);
    Fs[k] = (t * t) * coeffs.F(ts);
  }

  struct State {
    CMatrix q, qd;
  };
  auto rhs = [&](int stage, const State& y) {
    return State{y.qd, Es[stage] * y.qd + Fs[stage] * y.q};
  };

  std::vector<State> u(steps + 1), v(steps + 1);
  u[0] = {identity(nu), CMatrix::Zero(nu, nu)};
  v[0] = {CMatrix::Zero(nu, nu), identity(nu)};

  auto step = [&](std::vector<State>& y, int k) {
    const State& y0 = y[k];
    State k1 = rhs(2 * k, y0);
    State k2 = rhs(2 * k + 1, {y0.q + 0.5 * h * k1.q, y0.qd + 0.5 * h * k1.qd});
    State k3 = rhs(2 * k + 1, {y0.q + 0.5 * h * k2.q, y0.qd + 0.5 * h * k2.qd});
    State k4 = rhs(2 * k + 2, {y0.q + h * k3.q, y0.qd + h * k3.qd});
    y[k + 1] = {y0.q + (h / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
                y0.qd + (h / 6.0) * (k1.qd + 2.0 * k2.qd + 2.0 * k3.qd + k4.qd)};
  };
  for (int k = 0; k < steps; ++k) {
    step(u, k);
    step(v, k);
  }

  const CMatrix v1 = v[steps].q;
  Eigen::JacobiSVD<CMatrix> svd(v1);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  // Relative to the O(1) scale of the rescaled problem, so that a vanishing
  // V(1) is caught even when nu = 1.
  const double cond = (smin > 0.0) ? std::max(smax, 1.0) / smin
                                   : std::numeric_limits<double>::infinity();
  if (!(cond < 1e8))
    throw FocalPointError("solve_bvp: V(1) ill-conditioned, t outside the "
                          "usable radius (cond = " + std::to_string(cond) + ")",
                          cond);
  const CMatrix v1_inv = v1.partialPivLu().inverse();
  const CMatrix u1 = u[steps].q;

  TrajectoryBundle bundle;
  bundle.t_ = t;
  bundle.steps_ = steps;
  bundle.conditioning_ = cond;
  bundle.flat_q_.resize(steps + 1);
  bundle.flat_qd_.resize(steps + 1);
  bundle.flat_qdd_.resize(steps + 1);
  bundle.sharp_q_.resize(steps + 1);
  bundle.sharp_qd_.resize(steps + 1);
  bundle.sharp_qdd_.resize(steps + 1);
  const CMatrix proj = v1_inv * u1;  // q_sharp = U - V V(1)^{-1} U(1)
  for (int k = 0; k <= steps; ++k) {
    bundle.flat_q_[k] = v[k].q * v1_inv;
    bundle.flat_qd_[k] = v[k].qd * v1_inv;
    bundle.sharp_q_[k] = u[k].q - v[k].q * proj;
    bundle.sharp_qd_[k] = u[k].qd - v[k].qd * proj;
    bundle.flat_qdd_[k] = Es[2 * k] * bundle.flat_qd_[k] + Fs[2 * k] * bundle.flat_q_[k];
    bundle.sharp_qdd_[k] = Es[2 * k] * bundle.sharp_qd_[k] + Fs[2 * k] * bundle.sharp_q_[k];
  }
  return bundle;
}

CMatrix TrajectoryBundle::hermite(const std::vector<CMatrix>& f,
                                  const std::vector<CMatrix>& fd,
                                  double s) const {
  if (s <= 0.0) return f.front();
  if (s >= 1.0) return f.back();
  const double scaled = s * steps_;
  int k = std::min(static_cast<int>(scaled), steps_ - 1);
  const double u = scaled - k;
  const double h = 1.0 / steps_;
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * f[k] + (u3 - 2 * u2 + u) * h * fd[k] +
         (-2 * u3 + 3 * u2) * f[k + 1] + (u3 - u2) * h * fd[k + 1];
}

CMatrix TrajectoryBundle::q_flat(double s) const {
  return hermite(flat_q_, flat_qd_, s);
}
CMatrix TrajectoryBundle::q_flat_dot(double s) const {
  return hermite(flat_qd_, flat_qdd_, s);
}
CMatrix TrajectoryBundle::q_sharp(double s) const {
  return hermite(sharp_q_, sharp_qd_, s);
}
CMatrix TrajectoryBundle::q_sharp_dot(double s) const {
  return hermite(sharp_qd_, sharp_qdd_, s);
}

CVector TrajectoryBundle::qnat(double s, const CVector& x,
                               const CVector& y) const {
  return q_flat(s) * x + q_sharp(s) * y;
}

CVector TrajectoryBundle::qnat_dot(double s, const CVector& x,
                                   const CVector& y) const {
  return q_flat_dot(s) * x + q_sharp_dot(s) * y;
}

double TrajectoryBundle::interior_residual(const ElCoefficients& coeffs) const {
  // 4th-order finite differences on the node values; avoids the tautology of
  // re-evaluating the stored right-hand side.
  const double h = 1.0 / steps_;
  double worst = 0.0;
  for (int k = 2; k <= steps_ - 2; ++k) {
    for (const auto* q : {&flat_q_, &sharp_q_}) {
      const auto& f = *q;
      CMatrix d1 = (-f[k + 2] + 8.0 * f[k + 1] - 8.0 * f[k - 1] + f[k - 2]) /
                   (12.0 * h);
      CMatrix d2 = (-f[k + 2] + 16.0 * f[k + 1] - 30.0 * f[k] +
                    16.0 * f[k - 1] - f[k - 2]) /
                   (12.0 * h * h);
      Complex ts = t_ * (h * k);
      CMatrix res = d2 - t_ * coeffs.E(ts) * d1 - (t_ * t_) * coeffs.F(ts) * f[k];
      worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

CVector assemble_qnat(const TrajectoryBundle& bundle, const CVector& x,
                      const CVector& y, double s) {
  return bundle.qnat(s, x, y);
}

CVector assemble_qnat_dot(const TrajectoryBundle& bundle, const CVector& x,
                          const CVector& y, double s) {
  return bundle.qnat_dot(s, x, y);
}

// ---------------------------------------------------------------------------
// Action
// ---------------------------------------------------------------------------

ActionEvaluator::ActionEvaluator(const CoefficientModel& model,
                                 const TrajectoryBundle& bundle, int quad_nodes)
    : t_(bundle.time()), nu_(model.nu) {
  const int nu = nu_;
  GaussLegendre rule = gauss_legendre(quad_nodes, 0.0, 1.0);
  form_ = CMatrix::Zero(2 * nu, 2 * nu);
  for (int i = 0; i < quad_nodes; ++i) {
    const double s = rule.nodes[i];
    CMatrix w(nu, 2 * nu), wq(nu, 2 * nu);
    w << bundle.q_flat_dot(s), bundle.q_sharp_dot(s);
    wq << bundle.q_flat(s), bundle.q_sharp(s);
    const Complex ts = t_ * s;
    CMatrix a_inv = invert_or_throw(model.A(ts), "ActionEvaluator");
    CMatrix integrand = 0.25 * w.transpose() * a_inv * w +
                        t_ * w.transpose() * model.B(ts) * wq +
                        (t_ * t_) * wq.transpose() * model.C(ts) * wq;
    form_ += rule.weights[i] * integrand;
  }
}

Complex ActionEvaluator::phi(const CVector& x, const CVector& y) const {
  CVector z(2 * nu_);
  z << x, y;
  return (z.transpose() * form_ * z)(0, 0);
}

CVector ActionEvaluator::grad_x_phi(const CVector& x, const CVector& y) const {
  CVector z(2 * nu_);
  z << x, y;
  CVector grad = (form_ + form_.transpose()) * z;
  return grad.head(nu_);
}

CMatrix ActionEvaluator::hessian_xx() const {
  CMatrix sym = form_ + form_.transpose();
  return sym.topLeftCorner(nu_, nu_);
}

// ---------------------------------------------------------------------------
// theta
// ---------------------------------------------------------------------------

ThetaEvaluator::ThetaEvaluator(const CoefficientModel& model,
                               const ElCoefficients& coeffs, int bundle_steps,
                               int quad_nodes)
    : model_(&model),
      coeffs_(&coeffs),
      bundle_steps_(bundle_steps),
      quad_nodes_(quad_nodes),
      epsilon_(1e-3 * model.validity_radius) {}

Complex ThetaEvaluator::gamma(Complex t) const {
  return (model_->A(t) * model_->B(t)).trace();
}

Complex ThetaEvaluator::direct(Complex t) const {
  TrajectoryBundle bundle = solve_bvp(*coeffs_, t, bundle_steps_);
  ActionEvaluator action(*model_, bundle, quad_nodes_);
  CMatrix hess = action.hessian_xx();
  Complex a_dot_hess = (model_->A(t).cwiseProduct(hess)).sum();
  return -(a_dot_hess - 0.5 * model_->nu) / t + gamma(t);
}

Complex ThetaEvaluator::operator()(Complex t, bool allow_extrapolation) const {
  if (std::abs(t) >= epsilon_) return direct(t);
  if (!allow_extrapolation) {
    if (std::abs(t) == 0.0)
      throw CancellationAlarm("theta: t = 0 with extrapolation disabled");
    TrajectoryBundle bundle = solve_bvp(*coeffs_, t, bundle_steps_);
    ActionEvaluator action(*model_, bundle, quad_nodes_);
    Complex numerator =
        (model_->A(t).cwiseProduct(action.hessian_xx())).sum() -
        Complex(0.5 * model_->nu, 0.0);
    if (std::abs(numerator) < 1e-13)
      throw CancellationAlarm("theta: 1/t cancellation at |t| < epsilon");
    return -numerator / t + gamma(t);
  }
  const Complex dir =
      (std::abs(t) > 0.0) ? t / std::abs(t) : Complex(1.0, 0.0);
  const double u1 = 2.0 * epsilon_, u2 = 4.0 * epsilon_, u3 = 8.0 * epsilon_;
  const Complex f1 = direct(u1 * dir), f2 = direct(u2 * dir),
                f3 = direct(u3 * dir);
  const double u = std::abs(t);
  // Quadratic Lagrange extrapolation along the ray.
  auto lag = [&](double a, double b, double c) {
    return (u - b) * (u - c) / ((a - b) * (a - c));
  };
  return f1 * lag(u1, u2, u3) + f2 * lag(u2, u1, u3) + f3 * lag(u3, u1, u2);
}

Complex ThetaEvaluator::integral(Complex t, int gl_nodes) const {
  if (std::abs(t) == 0.0) return Complex(0.0, 0.0);
  GaussLegendre rule = gauss_legendre(gl_nodes, 0.0, 1.0);
  // All nodes share the ray of t: compute the extrapolation samples once.
  const Complex dir = t / std::abs(t);
  const double u1 = 2.0 * epsilon_, u2 = 4.0 * epsilon_, u3 = 8.0 * epsilon_;
  bool have_ray = false;
  Complex f1, f2, f3;
  Complex acc(0.0, 0.0);
  for (int i = 0; i < gl_nodes; ++i) {
    const Complex ts = t * rule.nodes[i];
    Complex value;
    if (std::abs(ts) >= epsilon_) {
      value = direct(ts);
    } else {
      if (!have_ray) {
        f1 = direct(u1 * dir);
        f2 = direct(u2 * dir);
        f3 = direct(u3 * dir);
        have_ray = true;
      }
      const double u = std::abs(ts);
      auto lag = [&](double a, double b, double c) {
        return (u - b) * (u - c) / ((a - b) * (a - c));
      };
      value = f1 * lag(u1, u2, u3) + f2 * lag(u2, u1, u3) + f3 * lag(u3, u1, u2);
    }
    acc += rule.weights[i] * value;
  }
  return t * t * acc;
}

// ---------------------------------------------------------------------------
// ActionResult / p0
// ---------------------------------------------------------------------------

ActionResult action_phi(const CoefficientModel& model,
                        const ElCoefficients& coeffs,
                        const TrajectoryBundle& bundle, const CVector& x,
                        const CVector& y, int quad_nodes) {
  const Complex t = bundle.time();
  ActionEvaluator action(model, bundle, quad_nodes);
  ThetaEvaluator theta(model, coeffs, bundle.steps(), quad_nodes);

  ActionResult result;
  result.phi = action.phi(x, y);
  result.theta_integral = theta.integral(t);
  result.phi0 = result.phi - result.theta_integral;

  const CMatrix a0_inv =
      invert_or_throw(model.A(Complex(0.0, 0.0)), "action_phi");
  const CVector diff = x - y;
  const Complex quad = 0.25 * (diff.transpose() * a0_inv * diff)(0, 0);
  if (std::abs(t) >= 1e-6) {
    result.psi = (result.phi - quad) / t;
  } else {
    // Removable singularity: extrapolate Psi from small |t| along the ray.
    const Complex dir =
        (std::abs(t) > 0.0) ? t / std::abs(t) : Complex(1.0, 0.0);
    const double e = 1e-4 * model.validity_radius;
    const double us[3] = {e, 2.0 * e, 4.0 * e};
    Complex samples[3];
    for (int j = 0; j < 3; ++j) {
      TrajectoryBundle b = solve_bvp(coeffs, us[j] * dir, bundle.steps());
      ActionEvaluator ev(model, b, quad_nodes);
      samples[j] = (ev.phi(x, y) - quad) / (us[j] * dir);
    }
    const double u = std::abs(t);
    auto lag = [&](double a, double b, double c) {
      return (u - b) * (u - c) / ((a - b) * (a - c));
    };
    result.psi = samples[0] * lag(us[0], us[1], us[2]) +
                 samples[1] * lag(us[1], us[0], us[2]) +
                 samples[2] * lag(us[2], us[0], us[1]);
  }
  return result;
}

std::pair<Complex, Complex> gamma_theta(const CoefficientModel& model,
                                        const ElCoefficients& coeffs, Complex t,
                                        bool allow_extrapolation) {
  ThetaEvaluator theta(model, coeffs);
  return {theta.gamma(t), theta(t, allow_extrapolation)};
}

Complex p0_eval(const CoefficientModel& model, const ActionResult& action,
                Complex t, const CVector&, const CVector&) {
  if (t == Complex(0.0, 0.0))
    throw UndefinedAtZeroError("p0_eval: t = 0");
  if (t.real() < 0.0)
    throw Error("p0_eval: Re t must be >= 0");
  const double delta = model.A(Complex(0.0, 0.0)).real().determinant();
  const Complex w = 4.0 * M_PI * delta * t;
  const Complex prefactor = principal_power(w, -0.5 * model.nu);
  return prefactor * std::exp(-action.phi0 / t);
}

Complex p0_value(const CoefficientModel& model, const ElCoefficients& coeffs,
                 Complex t, const CVector& x, const CVector& y, int steps) {
  TrajectoryBundle bundle = solve_bvp(coeffs, t, steps);
  ActionResult action = action_phi(model, coeffs, bundle, x, y);
  return p0_eval(model, action, t, x, y);
}

// ---------------------------------------------------------------------------
// Identity residuals
// ---------------------------------------------------------------------------

double eikonal_residual(const CoefficientModel& model,
                        const ElCoefficients& coeffs, double t,
                        const CVector& x, const CVector& y, double rel_step) {
  const int nu = model.nu;
  const double ht = rel_step * std::abs(t);
  auto action_at = [&](double tv) {
    TrajectoryBundle b = solve_bvp(coeffs, Complex(tv, 0.0), 256);
    return ActionEvaluator(model, b, 32);
  };
  ActionEvaluator at_t = action_at(t);
  ActionEvaluator at_plus = action_at(t + ht);
  ActionEvaluator at_minus = action_at(t - ht);

  auto S = [&](const ActionEvaluator& ev, const CVector& xv, double tv) {
    return ev.phi(xv, y) / Complex(tv, 0.0);
  };
  const Complex dt_S = (S(at_plus, x, t + ht) - S(at_minus, x, t - ht)) /
                       (2.0 * ht);
  CVector grad(nu);
  const double hx = rel_step * (1.0 + x.norm());
  for (int j = 0; j < nu; ++j) {
    CVector xp = x, xm = x;
    xp[j] += hx;
    xm[j] -= hx;
    grad[j] = (S(at_t, xp, t) - S(at_t, xm, t)) / (2.0 * hx);
  }
  const CMatrix a = model.A(t), b = model.B(t), c = model.C(t);
  const CVector u = grad - b * x;
  const Complex hamiltonian = (u.transpose() * a * u)(0, 0) -
                              (x.transpose() * c * x)(0, 0);
  return std::abs(dt_S + hamiltonian);
}

double symplectic_variation(const CoefficientModel& model,
                            const ElCoefficients&,
                            const TrajectoryBundle& bundle) {
  const Complex t = bundle.time();
  const int samples = bundle.steps();
  CMatrix ref;
  double worst = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double s = static_cast<double>(k) / samples;
    const CMatrix q = bundle.q_flat(s);
    const CMatrix qd = bundle.q_flat_dot(s);
    const Complex ts = t * s;
    const CMatrix a_inv = invert_or_throw(model.A(ts), "symplectic_variation");
    const CMatrix p = 0.5 * a_inv * qd / t + model.B(ts) * q;
    const CMatrix invariant = q.transpose() * p - p.transpose() * q;
    if (k == 0)
      ref = invariant;
    else
      worst = std::max(worst, (invariant - ref).cwiseAbs().maxCoeff());
  }
  return worst;
}

ClassicalIdentityReport classical_identity_residuals(
    const CoefficientModel& model, const ElCoefficients& coeffs, double t,
    const CVector& x, const CVector& y) {
  ClassicalIdentityReport report;
  const int nu = model.nu;
  const Complex tc(t, 0.0);
  TrajectoryBundle bundle = solve_bvp(coeffs, tc, 256);
  ActionEvaluator action(model, bundle, 32);
  ThetaEvaluator theta(model, coeffs, 256, 32);
  const Complex theta_int = theta.integral(tc);
  const double delta = model.A(Complex(0.0, 0.0)).real().determinant();
  const Complex prefactor =
      principal_power(4.0 * M_PI * delta * tc, -0.5 * nu);
  auto p0_at = [&](const CVector& xv) {
    return prefactor * std::exp(-(action.phi(xv, y) - theta_int) / tc);
  };

  // (i) momentum identity for the logarithmic gradient of p0.
  const Complex p0_center = p0_at(x);
  const double hx = 1e-5 * (1.0 + x.norm());
  CVector grad(nu);
  for (int j = 0; j < nu; ++j) {
    CVector xp = x, xm = x;
    xp[j] += hx;
    xm[j] -= hx;
    grad[j] = (p0_at(xp) - p0_at(xm)) / (2.0 * hx);
  }
  const CVector qnat_dot_end = bundle.qnat_dot(1.0, x, y) / tc;
  const CMatrix a_inv_t = invert_or_throw(model.A(tc), "identity residual");
  const CVector lhs = grad / p0_center + model.B(tc) * x;
  const CVector rhs = -0.5 * a_inv_t * qnat_dot_end;
  report.grad_log_p0 = (lhs - rhs).cwiseAbs().maxCoeff();

  // (ii) transport identity at fixed unscaled interior times.
  const double ht = 1e-5 * t;
  TrajectoryBundle plus = solve_bvp(coeffs, Complex(t + ht, 0.0), 256);
  TrajectoryBundle minus = solve_bvp(coeffs, Complex(t - ht, 0.0), 256);
  double transport_worst = 0.0;
  for (double frac : {0.25, 0.5, 0.75}) {
    const double su = frac * t;  // unscaled time, held fixed under d/dt
    const CVector d_dt =
        (plus.qnat(su / (t + ht), x, y) - minus.qnat(su / (t - ht), x, y)) /
        (2.0 * ht);
    const CVector advect = bundle.q_flat(su / t) * qnat_dot_end;
    transport_worst =
        std::max(transport_worst, (d_dt + advect).cwiseAbs().maxCoeff());
  }
  report.transport = transport_worst;

  // (iii) invariance of q^T p - p^T q along the trajectory.
  report.symplectic = symplectic_variation(model, coeffs, bundle);
  return report;
}

}  // namespace heatdef
