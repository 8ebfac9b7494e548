#pragma once

#include <random>
#include <string>
#include <vector>

#include "heatdef/problem_io.hpp"
#include "heatdef/types.hpp"

namespace heatdef {

struct CheckResult {
  std::string name;
  std::string status;  // PASS | FAIL | SKIP
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyConfig {
  std::vector<Complex> t_values = {Complex(0.2, 0.0), Complex(0.25, 0.0)};
  int probes = 20;
  std::uint64_t seed = 12345;
  int n_max = 4;
  int nodes_per_dim = 10;
  double tol = 1e-8;
  int steps = 256;
  int quadrature_order = 32;
  int grid_nodes = 24;
  bool run_cn = false;        // opt-in: slow Crank-Nicolson cross-check
  std::string snapshot_dir;   // when set, the CN check writes its field here
};

/// Deterministic uniform sampler; raw-bits mapping keeps reports
/// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double a, double b) {
    const double u = (gen_() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  }
  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// The full invariant suite for one problem: structural checks, trajectory
/// contracts, identity residuals, propagator checks, reality on the
/// imaginary axis, positivity and norm bounds, kernel self-consistency,
/// PDE residuals and oracle comparisons. Checks that need hypotheses the
/// problem fails (e.g. positivity without axis-reality) are reported SKIP
/// with a reason.
std::vector<CheckResult> run_verification(const Problem& problem,
                                          const VerifyConfig& config);

/// True iff every check passed (SKIPs do not count as failures).
bool all_passed(const std::vector<CheckResult>& results);

std::string results_to_json(const std::vector<CheckResult>& results);

}  // namespace heatdef
