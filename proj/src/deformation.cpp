#include "heatdef/deformation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "heatdef/errors.hpp"

namespace heatdef {

namespace {

std::string bundle_key(Complex targ) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.11e:%.11e", targ.real(), targ.imag());
  return buf;
}

}  // namespace

const TrajectoryBundle& DeformationKernel::bundle_at(Complex targ) const {
  const std::string key = bundle_key(targ);
  std::lock_guard<std::mutex> lock(cache_->mutex);
  auto it = cache_->map.find(key);
  if (it == cache_->map.end()) {
    auto bundle = std::make_unique<TrajectoryBundle>(
        solve_bvp(coeffs_, targ, options_.bundle_steps));
    it = cache_->map.emplace(key, std::move(bundle)).first;
  }
  return *it->second;
}

CMatrix DeformationKernel::quadrature_pair(double s, double sp) const {
  // Triangle orientation s <= sp; interval [sp, 1] in tau, integrated in
  // u with tau = sp^{1-u}. The integrand decays like 1/tau^2 near small
  // tau, which the logarithmic map turns into a gentle exponential.
  if (s <= 0.0 || sp >= 1.0) return CMatrix::Zero(nu_, nu_);
  const double a = sp;
  const double log_a = std::log(a);
  GaussLegendre rule = gauss_legendre(options_.quadrature_order, 0.0, 1.0);
  CMatrix acc = CMatrix::Zero(nu_, nu_);
  const CoefficientModel& model = coeffs_.model();
  for (int k = 0; k < options_.quadrature_order; ++k) {
    const double tau = std::exp((1.0 - rule.nodes[k]) * log_a);
    const double weight = rule.weights[k] * (-log_a) * tau;
    const TrajectoryBundle& bundle = bundle_at(t_ * tau);
    acc += weight * bundle.q_flat(s / tau) * model.A(t_ * tau) *
           bundle.q_flat(sp / tau).transpose();
  }
  return acc;
}

DeformationKernel DeformationKernel::build(const CoefficientModel& model,
                                           const ElCoefficients& coeffs,
                                           Complex t,
                                           const DeformationOptions& options) {
  if (std::abs(t) >= model.validity_radius)
    throw OutOfRadiusError("build_kernel: |t| >= validity radius");
  DeformationKernel kernel;
  kernel.t_ = t;
  kernel.nu_ = model.nu;
  kernel.options_ = options;
  kernel.coeffs_ = coeffs;
  kernel.grid_ = chebyshev_lobatto(options.grid_nodes - 1);

  const int n = static_cast<int>(kernel.grid_.nodes.size());
  kernel.values_.assign(n, std::vector<CMatrix>(n));
  GaussLegendre rule = gauss_legendre(options.quadrature_order, 0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    const double sp = kernel.grid_.nodes[j];
    if (sp <= 0.0 || sp >= 1.0) {
      for (int i = 0; i < n; ++i)
        kernel.values_[i][j] = CMatrix::Zero(model.nu, model.nu);
      continue;
    }
    // One row shares its tau nodes: warm the bundle cache, precompute the
    // right-hand factors, then sweep the sigma direction.
    const double log_a = std::log(sp);
    std::vector<double> taus(options.quadrature_order);
    std::vector<double> weights(options.quadrature_order);
    std::vector<CMatrix> right(options.quadrature_order);
    std::vector<const TrajectoryBundle*> bundles(options.quadrature_order);
    for (int k = 0; k < options.quadrature_order; ++k) {
      taus[k] = std::exp((1.0 - rule.nodes[k]) * log_a);
      weights[k] = rule.weights[k] * (-log_a) * taus[k];
      bundles[k] = &kernel.bundle_at(t * taus[k]);
      right[k] = model.A(t * taus[k]) *
                 bundles[k]->q_flat(sp / taus[k]).transpose();
    }
    for (int i = 0; i < n; ++i) {
      const double s = kernel.grid_.nodes[i] * sp;
      CMatrix acc = CMatrix::Zero(model.nu, model.nu);
      if (s > 0.0) {
        for (int k = 0; k < options.quadrature_order; ++k)
          acc += weights[k] * bundles[k]->q_flat(s / taus[k]) * right[k];
      }
      kernel.values_[i][j] = std::move(acc);
    }
  }
  return kernel;
}

CMatrix DeformationKernel::eval(double s, double sp) const {
  if (s > sp) return eval(sp, s).transpose();
  if (sp <= 1e-14 || sp >= 1.0 - 1e-14 || s <= 1e-14)
    return CMatrix::Zero(nu_, nu_);
  const double sigma = std::min(s / sp, 1.0);
  const auto wsig = barycentric_coeffs(grid_, sigma);
  const auto wsp = barycentric_coeffs(grid_, sp);
  CMatrix acc = CMatrix::Zero(nu_, nu_);
  const int n = static_cast<int>(grid_.nodes.size());
  for (int i = 0; i < n; ++i) {
    if (wsig[i] == 0.0) continue;
    CMatrix row = CMatrix::Zero(nu_, nu_);
    for (int j = 0; j < n; ++j)
      if (wsp[j] != 0.0) row += wsp[j] * values_[i][j];
    acc += wsig[i] * row;
  }
  return acc;
}

CMatrix DeformationKernel::eval_direct(double s, double sp) const {
  if (s > sp) return eval_direct(sp, s).transpose();
  return quadrature_pair(s, sp);
}

std::vector<CMatrix> DeformationKernel::contract_sp(double sp) const {
  std::vector<CMatrix> row;
  contract_sp_into(sp, row);
  return row;
}

void DeformationKernel::contract_sp_into(double sp,
                                         std::vector<CMatrix>& row) const {
  const int n = static_cast<int>(grid_.nodes.size());
  if (static_cast<int>(row.size()) != n) {
    row.assign(n, CMatrix::Zero(nu_, nu_));
  } else {
    for (auto& m : row) m.setZero();
  }
  if (sp <= 1e-14 || sp >= 1.0 - 1e-14) return;
  const auto wsp = barycentric_coeffs(grid_, sp);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (wsp[j] != 0.0) row[i] += wsp[j] * values_[i][j];
}

CMatrix DeformationKernel::eval_contracted(const std::vector<CMatrix>& row,
                                           double sigma) const {
  const auto wsig = barycentric_coeffs(grid_, std::min(sigma, 1.0));
  CMatrix acc = CMatrix::Zero(nu_, nu_);
  for (std::size_t i = 0; i < row.size(); ++i)
    if (wsig[i] != 0.0) acc += wsig[i] * row[i];
  return acc;
}

void DeformationKernel::dump_csv(std::ostream& out, int n) const {
  out << "s,sp";
  for (int r = 0; r < nu_; ++r)
    for (int c = 0; c < nu_; ++c)
      out << ",re_K_" << r << "_" << c << ",im_K_" << r << "_" << c;
  out << "\n";
  char buf[32];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = static_cast<double>(i) / (n - 1);
      const double sp = static_cast<double>(j) / (n - 1);
      CMatrix k = eval(s, sp);
      out << s << "," << sp;
      for (int r = 0; r < nu_; ++r)
        for (int c = 0; c < nu_; ++c) {
          std::snprintf(buf, sizeof(buf), "%.17g", k(r, c).real());
          out << "," << buf;
          std::snprintf(buf, sizeof(buf), "%.17g", k(r, c).imag());
          out << "," << buf;
        }
      out << "\n";
    }
  }
}

Complex quadratic_form(const DeformationKernel& kernel,
                       std::span<const PointMass> masses) {
  for (const auto& m : masses)
    if (m.s <= 0.0 || m.s >= 1.0)
      throw BoundaryMassError("quadratic_form: mass at s in {0, 1}");
  Complex acc(0.0, 0.0);
  for (const auto& mj : masses)
    for (const auto& mk : masses) {
      CMatrix kmat = kernel.eval(mj.s, mk.s);
      acc += (mj.xi.cast<Complex>().transpose() * kmat *
              mk.xi.cast<Complex>())(0, 0);
    }
  return acc;
}

double quadratic_form_zero(const RMatrix& a0,
                           std::span<const PointMass> masses) {
  double acc = 0.0;
  for (const auto& mj : masses)
    for (const auto& mk : masses) {
      const double lo = std::min(mj.s, mk.s), hi = std::max(mj.s, mk.s);
      acc += lo * (1.0 - hi) * (mj.xi.transpose() * a0 * mk.xi)(0, 0);
    }
  return acc;
}

PropagatorReport propagator_residual(const DeformationKernel& kernel,
                                     double s_prime, int probes,
                                     double fd_step) {
  PropagatorReport report;
  const Complex t = kernel.time();
  const CoefficientModel& model = kernel.model();
  const ElCoefficients& coeffs = kernel.coeffs();
  const double h = fd_step;

  auto column = [&](double s) { return kernel.eval_direct(s, s_prime); };

  for (int p = 0; p < probes; ++p) {
    const double s = (p + 0.5) / probes;
    if (std::abs(s - s_prime) < 5.0 * h) continue;
    if (s < 2.0 * h || s > 1.0 - 2.0 * h) continue;
    CMatrix f[5] = {column(s - 2 * h), column(s - h), column(s),
                    column(s + h), column(s + 2 * h)};
    CMatrix d1 = (-f[4] + 8.0 * f[3] - 8.0 * f[1] + f[0]) / (12.0 * h);
    CMatrix d2 = (-f[4] + 16.0 * f[3] - 30.0 * f[2] + 16.0 * f[1] - f[0]) /
                 (12.0 * h * h);
    const Complex ts = t * s;
    Eigen::FullPivLU<CMatrix> lu(model.A(ts));
    CMatrix residual = lu.inverse() * (-d2 + t * coeffs.E(ts) * d1 +
                                       (t * t) * coeffs.F(ts) * f[2]);
    report.max_ode_residual =
        std::max(report.max_ode_residual, residual.cwiseAbs().maxCoeff());
  }

  report.dirichlet0 = kernel.eval_direct(0.0, s_prime).cwiseAbs().maxCoeff();
  report.dirichlet1 = kernel.eval_direct(1.0, s_prime).cwiseAbs().maxCoeff();

  // One-sided 4th-order first derivatives from each side of the diagonal.
  const double c[5] = {-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25};
  CMatrix d_right = CMatrix::Zero(kernel.nu(), kernel.nu());
  CMatrix d_left = CMatrix::Zero(kernel.nu(), kernel.nu());
  for (int m = 0; m < 5; ++m) {
    d_right += (c[m] / h) * column(s_prime + m * h);
    d_left += (-c[m] / h) * column(s_prime - m * h);
  }
  CMatrix jump = d_right - d_left;
  CMatrix expected = -model.A(t * s_prime);
  report.jump_error = (jump - expected).cwiseAbs().maxCoeff();
  return report;
}

PositivityReport positivity_and_bounds(const DeformationKernel& kernel,
                                       std::span<const PointMass> masses) {
  if (masses.empty()) throw Error("positivity_and_bounds: no masses");
  PositivityReport report;
  const RMatrix a0 = kernel.model().A(Complex(0.0, 0.0)).real();
  report.form_t = quadratic_form(kernel, masses);
  report.form_zero = quadratic_form_zero(a0, masses);
  report.re_t_form = (kernel.time() * report.form_t).real();

  double xi_sq = 0.0;
  bool all_zero = true;
  for (const auto& m : masses) {
    xi_sq += m.xi.squaredNorm();
    if (m.xi.norm() > 0.0) all_zero = false;
  }
  if (report.form_zero <= 0.0 && !all_zero) {
    report.degenerate_zero_form = true;
    return report;
  }
  report.ratio_vs_zero =
      all_zero ? 0.0 : std::abs(report.form_t) / report.form_zero;
  const double a0_norm = operator_norm(a0.cast<Complex>());
  const double denom = 2.0 * static_cast<double>(masses.size()) * a0_norm * xi_sq;
  report.ratio_vs_bound = (denom > 0.0) ? std::abs(report.form_t) / denom : 0.0;
  return report;
}

CMatrix green_function_reference(const CoefficientModel& model,
                                 const TrajectoryBundle& bundle, double s,
                                 double s_prime) {
  // G = q_flat(s) C1 for s <= s', q_sharp(s) C2 for s >= s', glued with
  // continuity and a derivative jump of -A(t s') at s = s'.
  const int nu = model.nu;
  const Complex t = bundle.time();
  CMatrix block(2 * nu, 2 * nu);
  block.topLeftCorner(nu, nu) = bundle.q_flat(s_prime);
  block.topRightCorner(nu, nu) = -bundle.q_sharp(s_prime);
  block.bottomLeftCorner(nu, nu) = -bundle.q_flat_dot(s_prime);
  block.bottomRightCorner(nu, nu) = bundle.q_sharp_dot(s_prime);
  CMatrix rhs = CMatrix::Zero(2 * nu, nu);
  rhs.bottomRows(nu) = -model.A(t * s_prime);
  CMatrix c12 = block.partialPivLu().solve(rhs);
  if (s <= s_prime) return bundle.q_flat(s) * c12.topRows(nu);
  return bundle.q_sharp(s) * c12.bottomRows(nu);
}

}  // namespace heatdef
