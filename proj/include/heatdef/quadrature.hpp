#pragma once

#include <functional>
#include <vector>

#include "heatdef/types.hpp"

namespace heatdef {

/// Gauss-Legendre rule with n nodes on [a, b].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes/weights on [-1, 1] by Newton iteration on the Legendre recurrence.
GaussLegendre gauss_legendre(int n);

/// Affinely mapped rule on [a, b].
GaussLegendre gauss_legendre(int n, double a, double b);

/// Chebyshev-Lobatto points x_j = (1 - cos(j pi / n)) / 2 on [0, 1],
/// j = 0..n, together with barycentric weights.
struct ChebyshevLobatto {
  std::vector<double> nodes;
  std::vector<double> bary_weights;
};

ChebyshevLobatto chebyshev_lobatto(int n);

/// Barycentric interpolation weights w_j(x) such that
/// p(x) = sum_j w_j(x) f_j for the Lobatto grid. Exact at the nodes.
std::vector<double> barycentric_coeffs(const ChebyshevLobatto& grid, double x);

/// Adaptive Gauss-Kronrod 15(7) for matrix-valued integrands. Used by the
/// reference oracles only; the main evaluation path uses fixed-order
/// Gauss-Legendre so that agreement between the two is meaningful.
/// Throws ToleranceNotMetError if the subdivision limit is reached.
CMatrix adaptive_gauss_kronrod(const std::function<CMatrix(double)>& f,
                               double a, double b, double abs_tol,
                               int max_depth = 30);

}  // namespace heatdef
