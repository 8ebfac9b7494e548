#include "heatdef/series.hpp"

#include <cmath>

#include "heatdef/errors.hpp"
#include "heatdef/quadrature.hpp"

namespace heatdef {

namespace {

long long ipow_checked(long long base, int exp, long long cap) {
  long long acc = 1;
  for (int i = 0; i < exp; ++i) {
    if (acc > cap / std::max<long long>(base, 1)) return cap + 1;
    acc *= base;
  }
  return acc;
}

// Per-level data for one path of the nested simplex quadrature. Index 0 is
// the outermost variable s_n; kernel lookups always pair the current (small)
// s against ancestor (larger) values, staying inside the stored triangle.
struct Level {
  double s = 0.0;
  std::vector<CMatrix> kernel_row;          // contract_sp(s)
  std::vector<CVector> alpha;               // per mode: q_flat(s)^T xi
  std::vector<Complex> base;                // per mode: (q_sharp(s) y) . xi
  std::vector<Complex> diag;                // per mode: xi . Ktil(s,s) xi
  std::vector<CMatrix> amp;                 // per mode: a_m(s t)
  std::vector<std::vector<std::vector<Complex>>> cross;  // [anc][mu][lam]
};

class SimplexAccumulator {
 public:
  SimplexAccumulator(const DeformationKernel& kernel,
                     const TrajectoryBundle& bundle,
                     const FourierPotential& pot, int n, Complex t,
                     std::span<const CVector> xs, const CVector& y, int Q)
      : kernel_(kernel),
        bundle_(bundle),
        pot_(pot),
        n_(n),
        t_(t),
        xs_(xs),
        y_(y),
        q_(Q),
        d_(pot.d),
        m_(static_cast<int>(pot.modes.size())),
        levels_(n),
        modes_(n) {
    results_.assign(xs.size(), CMatrix::Zero(d_, d_));
    base_rule_ = gauss_legendre(Q, 0.0, 1.0);
    frequencies_.reserve(m_);
    zero_frequencies_ = true;
    for (const auto& mode : pot.modes) {
      frequencies_.push_back(mode.xi.cast<Complex>());
      if (mode.xi.norm() > 0.0) zero_frequencies_ = false;
    }
    // preallocate the per-level workspaces once; the tree sweep reuses them
    for (auto& level : levels_) {
      level.alpha.assign(m_, CVector::Zero(bundle.nu()));
      level.base.assign(m_, Complex(0.0, 0.0));
      level.diag.assign(m_, Complex(0.0, 0.0));
      level.amp.assign(m_, CMatrix::Zero(d_, d_));
      level.cross.assign(n_, std::vector<std::vector<Complex>>(
                                 m_, std::vector<Complex>(m_)));
    }
  }

  std::vector<CMatrix> run() {
    if (m_ == 0) return results_;
    descend(0, 1.0, 1.0);
    const Complex tn = std::pow(t_, n_);
    for (auto& r : results_) r *= tn;
    return results_;
  }

 private:
  void fill_level(Level& level, int depth, double s) {
    level.s = s;
    const CMatrix qf = bundle_.q_flat(s);
    const CMatrix qs = bundle_.q_sharp(s);
    for (int mu = 0; mu < m_; ++mu) {
      level.alpha[mu].noalias() = qf.transpose() * frequencies_[mu];
      level.base[mu] = bilinear_dot(qs * y_, frequencies_[mu]);
      level.amp[mu] = pot_.modes[mu].amplitude(s * t_);
    }
    if (zero_frequencies_) {
      // every xi contraction vanishes; skip the kernel table work
      for (int mu = 0; mu < m_; ++mu) level.diag[mu] = Complex(0.0, 0.0);
      return;
    }
    kernel_.contract_sp_into(s, level.kernel_row);
    const CMatrix diag_mat = kernel_.eval_contracted(level.kernel_row, 1.0);
    for (int mu = 0; mu < m_; ++mu) {
      level.diag[mu] =
          (frequencies_[mu].transpose() * diag_mat * frequencies_[mu])(0, 0);
    }
    for (int anc = 0; anc < depth; ++anc) {
      const Level& upper = levels_[anc];
      // Ktil(s, s_anc) with s <= s_anc via the ancestor's contracted row.
      const double sigma = (upper.s > 0.0) ? s / upper.s : 0.0;
      const CMatrix kmat = kernel_.eval_contracted(upper.kernel_row, sigma);
      auto& table = level.cross[anc];
      for (int mu = 0; mu < m_; ++mu) {
        const CVector left = kmat.transpose() * frequencies_[mu];
        for (int lam = 0; lam < m_; ++lam)
          table[mu][lam] = bilinear_dot(left, frequencies_[lam]);
      }
    }
  }

  void descend(int depth, double upper, double weight) {
    for (int node = 0; node < q_; ++node) {
      const double s = base_rule_.nodes[node] * upper;
      const double w = base_rule_.weights[node] * upper * weight;
      fill_level(levels_[depth], depth, s);
      if (depth == n_ - 1) {
        if (alpha_work_.empty()) {
          alpha_work_.assign(n_ + 1, CVector::Zero(bundle_.nu()));
          product_work_.assign(n_ + 1, CMatrix::Identity(d_, d_));
        }
        alpha_work_[0].setZero();
        product_work_[0].setIdentity();
        sum_tuples(0, w, Complex(0.0, 0.0), Complex(0.0, 0.0));
      } else {
        descend(depth + 1, s, w);
      }
    }
  }

  // Walk mode assignments from the outermost slot downward; amplitudes
  // multiply on the right so the finished product is a_{m_n} ... a_{m_1}.
  // alpha_work_ / product_work_ are depth-indexed scratch buffers.
  void sum_tuples(int depth, double weight, Complex quad, Complex base) {
    const Level& level = levels_[depth];
    for (int mu = 0; mu < m_; ++mu) {
      Complex quad_next = quad + level.diag[mu];
      for (int anc = 0; anc < depth; ++anc)
        quad_next += 2.0 * level.cross[anc][mu][modes_[anc]];
      const Complex base_next = base + level.base[mu];
      alpha_work_[depth + 1] = alpha_work_[depth] + level.alpha[mu];
      product_work_[depth + 1].noalias() =
          product_work_[depth] * level.amp[mu];
      modes_[depth] = mu;
      if (depth == n_ - 1) {
        const Complex common = -t_ * quad_next + Complex(0.0, 1.0) * base_next;
        for (std::size_t ix = 0; ix < xs_.size(); ++ix) {
          const Complex phase = bilinear_dot(alpha_work_[depth + 1], xs_[ix]);
          results_[ix] +=
              (weight * std::exp(common + Complex(0.0, 1.0) * phase)) *
              product_work_[depth + 1];
        }
      } else {
        sum_tuples(depth + 1, weight, quad_next, base_next);
      }
    }
  }

  const DeformationKernel& kernel_;
  const TrajectoryBundle& bundle_;
  const FourierPotential& pot_;
  int n_;
  Complex t_;
  std::span<const CVector> xs_;
  const CVector& y_;
  int q_, d_, m_;
  GaussLegendre base_rule_;
  std::vector<Level> levels_;
  std::vector<int> modes_;
  std::vector<CMatrix> results_;
  std::vector<CVector> frequencies_;
  std::vector<CVector> alpha_work_;
  std::vector<CMatrix> product_work_;
  bool zero_frequencies_ = false;
};

}  // namespace

std::vector<CMatrix> eval_vn_batch(const DeformationKernel& kernel,
                                   const TrajectoryBundle& bundle,
                                   const FourierPotential& pot, int n,
                                   Complex t, std::span<const CVector> xs,
                                   const CVector& y, int Q, long long budget) {
  if (n < 1) throw Error("eval_vn: n must be >= 1");
  if (Q < 1) throw Error("eval_vn: Q must be >= 1");
  if (std::abs(t - kernel.time()) > 1e-13 * (1.0 + std::abs(t)))
    throw Error("eval_vn: t disagrees with the kernel build");
  const long long m = static_cast<long long>(pot.modes.size());
  if (m > 0) {
    const long long evals = ipow_checked(m * Q, n, budget);
    if (evals > budget)
      throw BudgetError("eval_vn: (M Q)^n = " + std::to_string(m * Q) + "^" +
                        std::to_string(n) + " exceeds budget " +
                        std::to_string(budget));
  }
  SimplexAccumulator acc(kernel, bundle, pot, n, t, xs, y, Q);
  return acc.run();
}

SeriesTerm eval_vn(const DeformationKernel& kernel,
                   const TrajectoryBundle& bundle, const FourierPotential& pot,
                   int n, Complex t, const CVector& x, const CVector& y, int Q,
                   long long budget) {
  std::vector<CVector> xs = {x};
  auto values = eval_vn_batch(kernel, bundle, pot, n, t, xs, y, Q, budget);
  SeriesTerm term;
  term.order = n;
  term.value = values[0];
  term.quadrature_order = Q;
  long long tuples = 1;
  for (int i = 0; i < n; ++i) tuples *= static_cast<long long>(pot.modes.size());
  term.mode_tuple_count = tuples;
  return term;
}

double truncation_bound(const FourierPotential& pot, double R, Complex t,
                        int n_max) {
  if (pot.is_zero()) return 0.0;
  const double ahat = 2.0 * moment_bound(pot, 2.0 * R, std::abs(t));
  const double z = ahat * std::abs(t);
  if (z == 0.0) return 0.0;
  const double log_first =
      (n_max + 1) * std::log(z) - std::lgamma(n_max + 2.0);
  if (log_first > 700.0) return std::numeric_limits<double>::infinity();
  double term = std::exp(log_first);
  double sum = 0.0;
  for (int n = n_max + 1; n < n_max + 2000; ++n) {
    sum += term;
    term *= z / (n + 1);
    if (term < sum * 1e-18) break;
  }
  return sum;
}

KernelEvaluator::KernelEvaluator(const CoefficientModel& model,
                                 const FourierPotential& pot, Complex t,
                                 const SeriesOptions& options)
    : model_(&model),
      pot_(&pot),
      t_(t),
      options_(options),
      coeffs_(model),
      bundle_(solve_bvp(coeffs_, t, options.bundle_steps)),
      kernel_(DeformationKernel::build(
          model, coeffs_, t,
          DeformationOptions{options.kernel_quadrature, options.kernel_grid,
                             options.bundle_steps})),
      action_(model, bundle_, options.action_quadrature) {
  if (t == Complex(0.0, 0.0))
    throw UndefinedAtZeroError("eval_kernel: t = 0");
  if (t.real() < 0.0) throw Error("eval_kernel: Re t must be >= 0");
  ThetaEvaluator theta(model, coeffs_, options.bundle_steps,
                       options.action_quadrature);
  theta_integral_ = theta.integral(t);
  const double delta = model.A(Complex(0.0, 0.0)).real().determinant();
  p0_prefactor_ = principal_power(4.0 * M_PI * delta * t, -0.5 * model.nu);
}

Complex KernelEvaluator::p0(const CVector& x, const CVector& y) const {
  const Complex phi0 = action_.phi(x, y) - theta_integral_;
  return p0_prefactor_ * std::exp(-phi0 / t_);
}

KernelResult KernelEvaluator::eval(const CVector& x, const CVector& y) const {
  KernelResult result;
  result.p0 = p0(x, y);
  result.pconj = CMatrix::Identity(pot_->d, pot_->d);
  const double big_r = x.norm() + y.norm();
  result.tail_bound = 0.0;
  if (!pot_->is_zero()) {
    for (int n = 1; n <= options_.n_max; ++n) {
      SeriesTerm term = eval_vn(kernel_, bundle_, *pot_, n, t_, x, y,
                                options_.nodes_per_dim, options_.budget);
      result.pconj += term.value;
      result.terms.push_back(std::move(term));
      result.orders_used = n;
      result.tail_bound = truncation_bound(*pot_, big_r, t_, n);
      if (result.tail_bound < options_.tol) break;
    }
  }
  result.p = result.p0 * result.pconj;
  return result;
}

std::vector<CMatrix> KernelEvaluator::pconj_batch(std::span<const CVector> xs,
                                                  const CVector& y, int n_max,
                                                  int Q) const {
  std::vector<CMatrix> acc(xs.size(), CMatrix::Identity(pot_->d, pot_->d));
  if (pot_->is_zero()) return acc;
  for (int n = 1; n <= n_max; ++n) {
    auto terms = eval_vn_batch(kernel_, bundle_, *pot_, n, t_, xs, y, Q,
                               options_.budget);
    for (std::size_t i = 0; i < xs.size(); ++i) acc[i] += terms[i];
  }
  return acc;
}

KernelResult eval_kernel(const CoefficientModel& model,
                         const FourierPotential& pot, Complex t,
                         const CVector& x, const CVector& y,
                         const SeriesOptions& options) {
  KernelEvaluator evaluator(model, pot, t, options);
  return evaluator.eval(x, y);
}

double pde_residual(const CoefficientModel& model, const FourierPotential& pot,
                    double t, const CVector& x, const CVector& y,
                    const SeriesOptions& options) {
  const int nu = model.nu;
  const double ht = 1e-4 * t;
  const double hx = 1e-4 * (1.0 + x.norm());

  auto p_at = [&](double tv, const CVector& xv) {
    KernelEvaluator ev(model, pot, Complex(tv, 0.0), options);
    return ev.eval(xv, y).p;
  };

  // d_t p, 4th order.
  KernelEvaluator center(model, pot, Complex(t, 0.0), options);
  const CMatrix p_c = center.eval(x, y).p;
  const CMatrix dt_p = (-p_at(t + 2 * ht, x) + 8.0 * p_at(t + ht, x) -
                        8.0 * p_at(t - ht, x) + p_at(t - 2 * ht, x)) /
                       (12.0 * ht);

  // Spatial stencil at the centre t: shifts along axes and diagonal pairs.
  auto p_shift = [&](const RVector& offset) {
    CVector xv = x;
    for (int j = 0; j < nu; ++j) xv[j] += offset[j];
    return center.eval(xv, y).p;
  };
  std::vector<CMatrix> grad(nu);
  std::vector<std::vector<CMatrix>> hess(nu, std::vector<CMatrix>(nu));
  for (int j = 0; j < nu; ++j) {
    RVector e = RVector::Zero(nu);
    e[j] = hx;
    CMatrix p1 = p_shift(e), p2 = p_shift(2 * e), m1 = p_shift(-e),
            m2 = p_shift(-2 * e);
    grad[j] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * hx);
    hess[j][j] = (-p2 + 16.0 * p1 - 30.0 * p_c + 16.0 * m1 - m2) /
                 (12.0 * hx * hx);
  }
  const double w1 = 8.0 / (12.0 * hx), w2 = -1.0 / (12.0 * hx);
  for (int j = 0; j < nu; ++j)
    for (int k = j + 1; k < nu; ++k) {
      // product of two 4th-order first-derivative stencils
      CMatrix acc = CMatrix::Zero(p_c.rows(), p_c.cols());
      const int offs[4] = {-2, -1, 1, 2};
      const double ws[4] = {-w2, -w1, w1, w2};
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          RVector e = RVector::Zero(nu);
          e[j] = offs[a] * hx;
          e[k] = offs[b] * hx;
          acc += ws[a] * ws[b] * p_shift(e);
        }
      hess[j][k] = acc;
      hess[k][j] = acc;
    }

  const Complex tc(t, 0.0);
  const CMatrix a = model.A(tc), b = model.B(tc), c = model.C(tc);
  const CVector bx = b * x;
  CMatrix p0_op = CMatrix::Zero(p_c.rows(), p_c.cols());
  for (int j = 0; j < nu; ++j)
    for (int k = 0; k < nu; ++k) {
      CMatrix term = hess[j][k] + b(k, j) * p_c + bx[k] * grad[j] +
                     bx[j] * grad[k] + bx[j] * bx[k] * p_c;
      p0_op += a(j, k) * term;
    }
  const Complex cxx = (x.transpose() * c * x)(0, 0);
  p0_op -= cxx * p_c;

  const CMatrix pot_term = pot.eval(tc, x) * p_c;
  const CMatrix residual = dt_p - p0_op - pot_term;
  const double denom =
      operator_norm(p0_op) + operator_norm(pot_term) + 1e-300;
  return operator_norm(residual) / denom;
}

}  // namespace heatdef
