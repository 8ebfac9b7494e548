#include "heatdef/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "heatdef/errors.hpp"
#include "heatdef/quadrature.hpp"

namespace heatdef {

double free_heat_kernel(double t, double x, double y) {
  return std::exp(-(x - y) * (x - y) / (4.0 * t)) / std::sqrt(4.0 * M_PI * t);
}

double mehler_kernel(double omega, double t, double x, double y) {
  if (t <= 0.0) throw Error("mehler_kernel: t must be positive");
  if (omega < 1e-12) return free_heat_kernel(t, x, y);
  const double w = 2.0 * omega * t;
  const double sh = std::sinh(w), ch = std::cosh(w);
  const double prefactor = std::sqrt(omega / (2.0 * M_PI * sh));
  const double exponent =
      -omega * ((x * x + y * y) * ch - 2.0 * x * y) / (2.0 * sh);
  return prefactor * std::exp(exponent);
}

std::vector<double> grid_points(const Grid1D& grid) {
  std::vector<double> xs(grid.Nx);
  const double dx = grid.dx();
  for (int i = 0; i < grid.Nx; ++i) xs[i] = -grid.L + (i + 1) * dx;
  return xs;
}

namespace {

struct Tridiag {
  std::vector<Complex> lower, diag, upper;  // size Nx (lower[0]/upper[last] unused)
};

Tridiag assemble_operator(const CoefficientModel& model,
                          const FourierPotential& pot, const Grid1D& grid,
                          double t) {
  const Complex a = model.A(Complex(t, 0.0))(0, 0);
  const Complex b = model.B(Complex(t, 0.0))(0, 0);
  const Complex c = model.C(Complex(t, 0.0))(0, 0);
  const double dx = grid.dx();
  Tridiag op;
  op.lower.resize(grid.Nx);
  op.diag.resize(grid.Nx);
  op.upper.resize(grid.Nx);
  CVector xv(1);
  const auto xs = grid_points(grid);
  for (int i = 0; i < grid.Nx; ++i) {
    const double x = xs[i];
    xv[0] = x;
    const Complex pot_val =
        pot.is_zero() ? Complex(0.0, 0.0) : pot.eval(Complex(t, 0.0), xv)(0, 0);
    op.lower[i] = a / (dx * dx) - a * b * x / dx;
    op.upper[i] = a / (dx * dx) + a * b * x / dx;
    op.diag[i] = -2.0 * a / (dx * dx) + a * (b + b * b * x * x) - c * x * x +
                 pot_val;
  }
  return op;
}

// Thomas algorithm for (I - 0.5 dt Op) u = rhs.
std::vector<Complex> solve_cn(const Tridiag& op, double dt,
                              const std::vector<Complex>& rhs) {
  const int n = static_cast<int>(rhs.size());
  std::vector<Complex> c_prime(n), d_prime(n), u(n);
  auto diag = [&](int i) { return 1.0 - 0.5 * dt * op.diag[i]; };
  auto lower = [&](int i) { return -0.5 * dt * op.lower[i]; };
  auto upper = [&](int i) { return -0.5 * dt * op.upper[i]; };
  c_prime[0] = upper(0) / diag(0);
  d_prime[0] = rhs[0] / diag(0);
  for (int i = 1; i < n; ++i) {
    const Complex denom = diag(i) - lower(i) * c_prime[i - 1];
    c_prime[i] = upper(i) / denom;
    d_prime[i] = (rhs[i] - lower(i) * d_prime[i - 1]) / denom;
  }
  u[n - 1] = d_prime[n - 1];
  for (int i = n - 2; i >= 0; --i) u[i] = d_prime[i] - c_prime[i] * u[i + 1];
  return u;
}

std::vector<Complex> apply_half(const Tridiag& op, double dt,
                                const std::vector<Complex>& u) {
  const int n = static_cast<int>(u.size());
  std::vector<Complex> out(n);
  for (int i = 0; i < n; ++i) {
    Complex acc = (1.0 + 0.5 * dt * op.diag[i]) * u[i];
    if (i > 0) acc += 0.5 * dt * op.lower[i] * u[i - 1];
    if (i + 1 < n) acc += 0.5 * dt * op.upper[i] * u[i + 1];
    out[i] = acc;
  }
  return out;
}

double norm2(const std::vector<Complex>& u) {
  double acc = 0.0;
  for (const auto& v : u) acc += std::norm(v);
  return std::sqrt(acc);
}

}  // namespace

std::vector<Complex> cn_evolve(const CoefficientModel& model,
                               const FourierPotential& pot, const Grid1D& grid,
                               std::vector<Complex> u0, double t0, double t1) {
  if (model.nu != 1) throw Error("cn_evolve: nu must be 1");
  if (!(t0 > 0.0) || !(t1 > t0)) throw Error("cn_evolve: need 0 < t0 < t1");
  if (static_cast<int>(u0.size()) != grid.Nx)
    throw Error("cn_evolve: u0 size mismatch");
  if (grid.Nx < 200) throw Error("cn_evolve: Nx must be >= 200");
  for (double t : {t0, 0.5 * (t0 + t1), t1}) {
    for (const MatrixPolynomial* p : {&model.A, &model.B, &model.C}) {
      if (std::abs((*p)(Complex(t, 0.0))(0, 0).imag()) > 1e-12)
        throw Error("cn_evolve: coefficients must be real at real t");
    }
  }
  const int steps = std::max(1, static_cast<int>(std::llround((t1 - t0) / grid.dt)));
  const double dt = (t1 - t0) / steps;
  const double initial_norm = norm2(u0);
  Tridiag op_now = assemble_operator(model, pot, grid, t0);
  for (int k = 0; k < steps; ++k) {
    const double t_next = t0 + (k + 1) * dt;
    Tridiag op_next = assemble_operator(model, pot, grid, t_next);
    std::vector<Complex> rhs = apply_half(op_now, dt, u0);
    u0 = solve_cn(op_next, dt, rhs);
    op_now = std::move(op_next);
    if (norm2(u0) > initial_norm * std::exp(10.0))
      throw DivergedError("cn_evolve: norm growth beyond e^10");
  }
  return u0;
}

std::string snapshot_csv(const Grid1D& grid, const std::vector<Complex>& u) {
  std::string out = "x,re_u,im_u\n";
  const auto xs = grid_points(grid);
  char buf[96];
  for (std::size_t i = 0; i < u.size() && i < xs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", xs[i],
                  u[i].real(), u[i].imag());
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dormand-Prince boundary-value oracle
// ---------------------------------------------------------------------------

namespace {

// Butcher tableau for Dormand-Prince 5(4).
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kB5[7] = {35.0 / 384,    0.0,  500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,  0.0,           7571.0 / 16695,
                           393.0 / 640,     -92097.0 / 339200,
                           187.0 / 2100,    1.0 / 40};

}  // namespace

OracleBvpValues oracle_bvp(const ElCoefficients& coeffs, Complex t,
                           const std::vector<double>& sigmas, double tol) {
  const int nu = coeffs.model().nu;
  if (nu > 8) throw Error("oracle_bvp: supports nu <= 8");
  // fixed-capacity matrices keep the stage loop allocation-free
  using Small = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, 16, 16>;
  auto system_matrix = [&](double s) {
    Small m = Small::Zero(2 * nu, 2 * nu);
    m.topRightCorner(nu, nu) = identity(nu);
    m.bottomLeftCorner(nu, nu) = (t * t) * coeffs.F(t * s);
    m.bottomRightCorner(nu, nu) = t * coeffs.E(t * s);
    return m;
  };

  std::vector<double> stops = sigmas;
  stops.push_back(1.0);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  Small y = Small::Identity(2 * nu, 2 * nu);  // fundamental matrix
  double s = 0.0;
  double h = 1e-2;
  std::vector<CMatrix> at_stops;
  Small k[7], arg, y5, y4;
  for (double target : stops) {
    if (target <= 0.0) {
      at_stops.push_back(CMatrix::Identity(2 * nu, 2 * nu));
      continue;
    }
    while (s < target - 1e-15) {
      double step = std::min(h, target - s);
      bool accepted = false;
      for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
        for (int stage = 0; stage < 7; ++stage) {
          arg = y;
          for (int prev = 0; prev < stage; ++prev)
            if (kA[stage][prev] != 0.0) arg += step * kA[stage][prev] * k[prev];
          k[stage].noalias() = system_matrix(s + kC[stage] * step) * arg;
        }
        y5 = y;
        y4 = y;
        for (int stage = 0; stage < 7; ++stage) {
          if (kB5[stage] != 0.0) y5 += step * kB5[stage] * k[stage];
          if (kB4[stage] != 0.0) y4 += step * kB4[stage] * k[stage];
        }
        const double err = (y5 - y4).cwiseAbs().maxCoeff();
        const double scale =
            tol * std::max(1.0, y.cwiseAbs().maxCoeff());
        if (err <= scale) {
          y = y5;
          s += step;
          accepted = true;
        }
        const double factor =
            0.9 * std::pow(scale / std::max(err, 1e-300), 0.2);
        h = step * std::clamp(factor, 0.2, 5.0);
        if (!accepted) step = std::min(h, target - s);
      }
      if (!accepted)
        throw ToleranceNotMetError("oracle_bvp: step control failed", h);
    }
    at_stops.push_back(y);
  }

  // y at sigma = 1 is the last stop (stops sorted, 1.0 appended).
  const CMatrix& y1 = at_stops.back();
  const CMatrix u1 = y1.topLeftCorner(nu, nu);
  const CMatrix v1 = y1.topRightCorner(nu, nu);
  Eigen::FullPivLU<CMatrix> lu(v1);
  if (!lu.isInvertible())
    throw FocalPointError("oracle_bvp: V(1) singular", 0.0);
  const CMatrix v1_inv = lu.inverse();
  const CMatrix proj = v1_inv * u1;

  OracleBvpValues values;
  for (double sigma : sigmas) {
    auto it = std::lower_bound(stops.begin(), stops.end(), sigma);
    const CMatrix& ys = at_stops[static_cast<std::size_t>(it - stops.begin())];
    const CMatrix u = ys.topLeftCorner(nu, nu);
    const CMatrix v = ys.topRightCorner(nu, nu);
    values.q_flat.push_back(v * v1_inv);
    values.q_sharp.push_back(u - v * proj);
  }
  return values;
}

// ---------------------------------------------------------------------------
// Brute-force series term
// ---------------------------------------------------------------------------

namespace {

class BruteForce {
 public:
  BruteForce(const FourierPotential& pot, const CoefficientModel& model,
             Complex t, const CVector& x, const CVector& y)
      : pot_(pot), model_(model), coeffs_(model), t_(t), x_(x), y_(y) {}

  CMatrix kernel_entry(double s, double sp) const {
    const double a = std::max(s, sp);
    const int nu = model_.nu;
    if (std::min(s, sp) <= 0.0 || a >= 1.0) return CMatrix::Zero(nu, nu);
    auto integrand = [&](double tau) {
      OracleBvpValues traj =
          oracle_bvp(coeffs_, t_ * tau, {s / tau, sp / tau}, 1e-12);
      return static_cast<CMatrix>(traj.q_flat[0] * model_.A(t_ * tau) *
                                  traj.q_flat[1].transpose());
    };
    return adaptive_gauss_kronrod(integrand, a, 1.0, 1e-13);
  }

  CVector qnat(double s) const {
    OracleBvpValues traj = oracle_bvp(coeffs_, t_, {s}, 1e-12);
    return traj.q_flat[0] * x_ + traj.q_sharp[0] * y_;
  }

  CMatrix integrand1(double s1) const {
    const CVector z1 = qnat(s1);
    const CMatrix k11 = kernel_entry(s1, s1);
    CMatrix acc = CMatrix::Zero(pot_.d, pot_.d);
    for (const auto& mode : pot_.modes) {
      const CVector xi = mode.xi.cast<Complex>();
      const Complex quad = (xi.transpose() * k11 * xi)(0, 0);
      acc += std::exp(Complex(0.0, 1.0) * bilinear_dot(z1, xi) - t_ * quad) *
             mode.amplitude(s1 * t_);
    }
    return acc;
  }

  CMatrix integrand2(double s1, double s2) const {
    const CVector z1 = qnat(s1), z2 = qnat(s2);
    const CMatrix k11 = kernel_entry(s1, s1);
    const CMatrix k22 = kernel_entry(s2, s2);
    const CMatrix k12 = kernel_entry(s1, s2);
    CMatrix acc = CMatrix::Zero(pot_.d, pot_.d);
    for (const auto& m1 : pot_.modes) {
      for (const auto& m2 : pot_.modes) {
        const CVector xi1 = m1.xi.cast<Complex>();
        const CVector xi2 = m2.xi.cast<Complex>();
        Complex quad = (xi1.transpose() * k11 * xi1)(0, 0) +
                       (xi2.transpose() * k22 * xi2)(0, 0) +
                       2.0 * (xi1.transpose() * k12 * xi2)(0, 0);
        Complex phase = bilinear_dot(z1, xi1) + bilinear_dot(z2, xi2);
        // amplitudes in descending index order: a_{m2}(s2 t) a_{m1}(s1 t)
        acc += std::exp(Complex(0.0, 1.0) * phase - t_ * quad) *
               (m2.amplitude(s2 * t_) * m1.amplitude(s1 * t_));
      }
    }
    return acc;
  }

  const FourierPotential& pot_;
  const CoefficientModel& model_;
  ElCoefficients coeffs_;
  Complex t_;
  CVector x_, y_;
};

}  // namespace

CMatrix brute_force_vn(const FourierPotential& pot,
                       const CoefficientModel& model, int n, Complex t,
                       const CVector& x, const CVector& y, double abs_tol) {
  if (n < 1 || n > 2) throw Error("brute_force_vn: n must be 1 or 2");
  if (pot.is_zero()) return CMatrix::Zero(pot.d, pot.d);
  BruteForce bf(pot, model, t, x, y);
  if (n == 1) {
    auto f = [&](double s1) { return bf.integrand1(s1); };
    return t * adaptive_gauss_kronrod(f, 0.0, 1.0, abs_tol / std::abs(t));
  }
  auto outer = [&](double s2) {
    auto inner = [&](double s1) { return bf.integrand2(s1, s2); };
    if (s2 <= 1e-14) return CMatrix::Zero(pot.d, pot.d).eval();
    return adaptive_gauss_kronrod(inner, 0.0, s2, 0.5 * abs_tol).eval();
  };
  return (t * t) * adaptive_gauss_kronrod(outer, 0.0, 1.0,
                                          0.5 * abs_tol / std::norm(t));
}

}  // namespace heatdef
