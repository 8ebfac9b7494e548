#include "heatdef/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "heatdef/errors.hpp"

namespace heatdef {

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n(x) = 0.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

GaussLegendre gauss_legendre(int n, double a, double b) {
  GaussLegendre base = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    base.nodes[i] = mid + half * base.nodes[i];
    base.weights[i] *= half;
  }
  return base;
}

ChebyshevLobatto chebyshev_lobatto(int n) {
  if (n < 1) throw std::invalid_argument("chebyshev_lobatto: n must be >= 1");
  ChebyshevLobatto grid;
  grid.nodes.resize(n + 1);
  grid.bary_weights.resize(n + 1);
  for (int j = 0; j <= n; ++j) {
    grid.nodes[j] = 0.5 * (1.0 - std::cos(M_PI * j / n));
    double w = (j % 2 == 0) ? 1.0 : -1.0;
    if (j == 0 || j == n) w *= 0.5;
    grid.bary_weights[j] = w;
  }
  return grid;
}

std::vector<double> barycentric_coeffs(const ChebyshevLobatto& grid, double x) {
  const std::size_t m = grid.nodes.size();
  std::vector<double> coeffs(m, 0.0);
  double denom = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double diff = x - grid.nodes[j];
    if (std::abs(diff) < 1e-14) {
      coeffs.assign(m, 0.0);
      coeffs[j] = 1.0;
      return coeffs;
    }
    coeffs[j] = grid.bary_weights[j] / diff;
    denom += coeffs[j];
  }
  for (auto& c : coeffs) c /= denom;
  return coeffs;
}

namespace {

// Gauss-Kronrod 15-point nodes/weights (QUADPACK gk15), abscissae on [-1,1].
constexpr double kGK15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
constexpr double kGK15WeightsK[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr double kGK15WeightsG[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct PanelResult {
  CMatrix integral;
  double error;
};

PanelResult gk15_panel(const std::function<CMatrix(double)>& f, double a,
                       double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  CMatrix fc = f(mid);
  CMatrix kronrod = kGK15WeightsK[7] * fc;
  CMatrix gauss = kGK15WeightsG[3] * fc;
  for (int i = 0; i < 7; ++i) {
    CMatrix lo = f(mid - half * kGK15Nodes[i]);
    CMatrix hi = f(mid + half * kGK15Nodes[i]);
    kronrod += kGK15WeightsK[i] * (lo + hi);
    if (i % 2 == 1) gauss += kGK15WeightsG[i / 2] * (lo + hi);
  }
  PanelResult r{half * kronrod, 0.0};
  double diff = operator_norm(half * (kronrod - gauss));
  // QUADPACK-style sharpened error estimate.
  r.error = (diff > 0.0) ? std::pow(200.0 * diff, 1.5) : 0.0;
  if (r.error > diff || r.error == 0.0) r.error = diff;
  return r;
}

void gk15_recurse(const std::function<CMatrix(double)>& f, double a, double b,
                  double tol, int depth, int max_depth, CMatrix& acc,
                  double& err_acc) {
  PanelResult panel = gk15_panel(f, a, b);
  if (panel.error <= tol || depth >= max_depth) {
    if (panel.error > tol && depth >= max_depth)
      throw ToleranceNotMetError("adaptive_gauss_kronrod: subdivision limit",
                                 panel.error);
    acc += panel.integral;
    err_acc += panel.error;
    return;
  }
  double mid = 0.5 * (a + b);
  gk15_recurse(f, a, mid, 0.5 * tol, depth + 1, max_depth, acc, err_acc);
  gk15_recurse(f, mid, b, 0.5 * tol, depth + 1, max_depth, acc, err_acc);
}

}  // namespace

CMatrix adaptive_gauss_kronrod(const std::function<CMatrix(double)>& f,
                               double a, double b, double abs_tol,
                               int max_depth) {
  CMatrix probe = f(0.5 * (a + b));
  CMatrix acc = CMatrix::Zero(probe.rows(), probe.cols());
  double err = 0.0;
  gk15_recurse(f, a, b, abs_tol, 0, max_depth, acc, err);
  return acc;
}

}  // namespace heatdef
