#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "heatdef/deformation.hpp"
#include "heatdef/errors.hpp"
#include "test_helpers.hpp"

using namespace heatdef;
using namespace heatdef::testing;

namespace {

RMatrix rot_beta() {
  RMatrix beta(2, 2);
  beta << 0.0, 1.0, -1.0, 0.0;
  return beta;
}

double free_closed_form(double s, double sp) {
  return std::min(s, sp) * (1.0 - std::max(s, sp));
}

}  // namespace

TEST_CASE("free deformation matrix equals min(s,s')(1 - max(s,s'))") {
  auto model = CoefficientModel::free_model(1);
  ElCoefficients coeffs(model);
  for (Complex t : {Complex(0.2, 0.0), Complex(0.1, 0.1), Complex(0.0, 0.25)}) {
    DeformationKernel kernel = build_kernel(model, coeffs, t);
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 50; ++rep) {
      const double s = urand(gen, 0.0, 1.0), sp = urand(gen, 0.0, 1.0);
      const double expected = free_closed_form(s, sp);
      CHECK(std::abs(kernel.eval(s, sp)(0, 0) - expected) < 1e-11);
      CHECK(std::abs(kernel.eval_direct(s, sp)(0, 0) - expected) < 1e-11);
    }
    // the matrix does not depend on t in the free case
    CHECK(std::abs(kernel.eval(0.3, 0.7)(0, 0) - 0.3 * 0.3) < 1e-12);
  }
}

TEST_CASE("magnetic deformation matrix matches the closed form") {
  auto model = CoefficientModel::magnetic(rot_beta());
  ElCoefficients coeffs(model);
  for (Complex t : {Complex(0.3, 0.0), Complex(0.0, 0.3)}) {
    DeformationKernel kernel = build_kernel(model, coeffs, t);
    MagneticClosedForms closed{rot_beta().cast<Complex>(), t};
    std::mt19937_64 gen(29);
    for (int rep = 0; rep < 25; ++rep) {
      const double s = urand(gen, 0.02, 0.98), sp = urand(gen, 0.02, 0.98);
      const CMatrix expected = closed.kernel(s, sp);
      CHECK((kernel.eval_direct(s, sp) - expected).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((kernel.eval(s, sp) - expected).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("kernel vanishes on the boundary of the square") {
  auto model = CoefficientModel::magnetic(rot_beta());
  ElCoefficients coeffs(model);
  DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.25, 0.0));
  for (double s : {0.0, 0.17, 0.5, 0.99, 1.0}) {
    CHECK(kernel.eval(0.0, s).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(kernel.eval(1.0, s).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(kernel.eval(s, 0.0).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(kernel.eval(s, 1.0).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("transpose symmetry of the direct quadrature") {
  auto model = CoefficientModel::magnetic(rot_beta());
  ElCoefficients coeffs(model);
  DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.2, 0.1));
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 20; ++rep) {
    const double s = urand(gen, 0.02, 0.98), sp = urand(gen, 0.02, 0.98);
    CMatrix a = kernel.eval_direct(s, sp);
    CMatrix b = kernel.eval_direct(sp, s);
    CHECK((a.transpose() - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("interpolant is continuous across the diagonal") {
  auto model = CoefficientModel::magnetic(rot_beta());
  ElCoefficients coeffs(model);
  DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.3, 0.0));
  for (double s : {0.2, 0.45, 0.71, 0.9}) {
    CMatrix below = kernel.eval(s - 1e-9, s);
    CMatrix above = kernel.eval(s + 1e-9, s);
    CHECK((below - above).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("doubling the quadrature order leaves grid values unchanged") {
  auto model = CoefficientModel::magnetic(rot_beta());
  ElCoefficients coeffs(model);
  DeformationOptions opts;
  opts.grid_nodes = 16;
  opts.quadrature_order = 32;
  DeformationKernel coarse =
      DeformationKernel::build(model, coeffs, Complex(0.3, 0.0), opts);
  opts.quadrature_order = 64;
  DeformationKernel fine =
      DeformationKernel::build(model, coeffs, Complex(0.3, 0.0), opts);
  double worst = 0.0;
  for (int i = 0; i <= 14; ++i)
    for (int j = 0; j <= 14; ++j) {
      const double s = i / 14.0, sp = j / 14.0;
      worst = std::max(worst,
                       (coarse.eval(s, sp) - fine.eval(s, sp))
                           .cwiseAbs()
                           .maxCoeff());
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("interpolation agrees with direct quadrature off the grid") {
  auto model = CoefficientModel::magnetic(rot_beta());
  ElCoefficients coeffs(model);
  DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.25, 0.1));
  std::mt19937_64 gen(37);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const double s = urand(gen, 0.0, 1.0), sp = urand(gen, 0.0, 1.0);
    worst = std::max(worst, (kernel.eval(s, sp) - kernel.eval_direct(s, sp))
                                .cwiseAbs()
                                .maxCoeff());
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("green's-function construction reproduces the quadrature kernel") {
  for (const auto& model : {CoefficientModel::harmonic(1.0, 1),
                            CoefficientModel::magnetic(rot_beta())}) {
    ElCoefficients coeffs(model);
    const Complex t(0.25, 0.0);
    DeformationKernel kernel = build_kernel(model, coeffs, t);
    TrajectoryBundle bundle = solve_bvp(coeffs, t, 256);
    std::mt19937_64 gen(41);
    for (int rep = 0; rep < 30; ++rep) {
      const double s = urand(gen, 0.03, 0.97), sp = urand(gen, 0.03, 0.97);
      CMatrix direct = kernel.eval_direct(s, sp);
      CMatrix green = green_function_reference(model, bundle, s, sp);
      CHECK((direct - green).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("propagator checks in the free case") {
  auto model = CoefficientModel::free_model(1);
  ElCoefficients coeffs(model);
  DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.2, 0.0));
  PropagatorReport report = propagator_residual(kernel, 0.4);
  // piecewise-linear in s: slopes 1 - s' and -s', jump -1 = -A
  CHECK(report.max_ode_residual < 1e-8);
  CHECK(report.dirichlet0 < 1e-10);
  CHECK(report.dirichlet1 < 1e-10);
  CHECK(report.jump_error < 1e-6);
}

TEST_CASE("propagator jump matches -A(t s') for the magnetic model") {
  auto model = CoefficientModel::magnetic(rot_beta());
  ElCoefficients coeffs(model);
  DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.3, 0.0));
  for (double sp : {0.3, 0.5, 0.8}) {
    PropagatorReport report = propagator_residual(kernel, sp);
    CHECK(report.max_ode_residual < 1e-5);
    CHECK(report.dirichlet0 < 1e-10);
    CHECK(report.dirichlet1 < 1e-10);
    CHECK(report.jump_error < 1e-5);
  }
}

TEST_CASE("quadratic form basics") {
  auto model = CoefficientModel::free_model(1);
  ElCoefficients coeffs(model);
  DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.2, 0.0));

  RVector one(1);
  one[0] = 1.0;
  std::vector<PointMass> single = {{0.5, one}};
  CHECK(std::abs(quadratic_form(kernel, single) - 0.25) < 1e-11);

  std::vector<PointMass> zeros = {{0.3, RVector::Zero(1)},
                                  {0.6, RVector::Zero(1)}};
  CHECK(std::abs(quadratic_form(kernel, zeros)) == 0.0);

  std::vector<PointMass> boundary = {{0.0, one}};
  CHECK_THROWS_AS(quadratic_form(kernel, boundary), BoundaryMassError);

  // free case: the form is t-independent and equals the t = 0 limit
  std::mt19937_64 gen(43);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<PointMass> masses;
    for (int j = 0; j < 4; ++j) {
      RVector xi(1);
      xi[0] = urand(gen, -2, 2);
      masses.push_back({urand(gen, 0.05, 0.95), xi});
    }
    const double zero_form =
        quadratic_form_zero(model.A(0.0).real(), masses);
    CHECK(std::abs(quadratic_form(kernel, masses) - zero_form) < 1e-10);
  }
}

TEST_CASE("quadratic form approaches the t = 0 closed form") {
  auto model = CoefficientModel::harmonic(1.0, 1);
  ElCoefficients coeffs(model);
  RVector one(1);
  one[0] = 1.0;
  std::vector<PointMass> masses = {{0.3, one}, {0.7, 2.0 * one}};
  const double zero_form = quadratic_form_zero(model.A(0.0).real(), masses);
  DeformationKernel small = build_kernel(model, coeffs, Complex(1e-3, 0.0));
  CHECK(std::abs(quadratic_form(small, masses) - zero_form) <
        1e-4 * zero_form);
}

TEST_CASE("positivity and norm bounds") {
  {  // free, real t: the form is real and positive
    auto model = CoefficientModel::free_model(1);
    ElCoefficients coeffs(model);
    DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.2, 0.0));
    std::mt19937_64 gen(47);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<PointMass> masses;
      const int n = 1 + static_cast<int>(gen() % 4);
      for (int j = 0; j < n; ++j) {
        RVector xi(1);
        xi[0] = urand(gen, -2, 2);
        masses.push_back({urand(gen, 0.05, 0.95), xi});
      }
      PositivityReport rep_p = positivity_and_bounds(kernel, masses);
      CHECK(rep_p.re_t_form >= -1e-12);
      CHECK(rep_p.ratio_vs_zero == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(rep_p.ratio_vs_bound <= 1.0 + 1e-9);
      CHECK_FALSE(rep_p.degenerate_zero_form);
    }
  }
  {  // magnetic on the imaginary axis: form is real, t * form has Re >= 0
    auto model = CoefficientModel::magnetic(rot_beta());
    ElCoefficients coeffs(model);
    DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.0, 0.1));
    std::vector<PointMass> masses;
    RVector e1 = RVector::Zero(2), e2 = RVector::Zero(2);
    e1[0] = 1.0;
    e2[1] = 1.0;
    masses.push_back({1.0 / 3.0, e1});
    masses.push_back({2.0 / 3.0, e2});
    PositivityReport rep = positivity_and_bounds(kernel, masses);
    CHECK(std::abs(rep.form_t.imag()) < 1e-9);
    CHECK(rep.re_t_form >= -1e-12);
    CHECK(rep.ratio_vs_zero <= 2.0 + 1e-9);
    CHECK(rep.ratio_vs_bound <= 1.0 + 1e-9);
  }
}

TEST_CASE("kernel entries are real on the imaginary axis") {
  auto model = CoefficientModel::magnetic(rot_beta());
  ElCoefficients coeffs(model);
  for (double tau : {-0.15, 0.05, 0.15}) {
    DeformationOptions opts;
    opts.grid_nodes = 14;
    DeformationKernel kernel =
        DeformationKernel::build(model, coeffs, Complex(0.0, tau), opts);
    std::mt19937_64 gen(53);
    for (int rep = 0; rep < 40; ++rep) {
      const double s = urand(gen, 0.0, 1.0), sp = urand(gen, 0.0, 1.0);
      CHECK(kernel.eval(s, sp).imag().cwiseAbs().maxCoeff() < 1e-9);
      CHECK(kernel.eval_direct(s, sp).imag().cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("csv dump has the documented shape") {
  auto model = CoefficientModel::free_model(1);
  ElCoefficients coeffs(model);
  DeformationKernel kernel = build_kernel(model, coeffs, Complex(0.2, 0.0));
  std::ostringstream out;
  kernel.dump_csv(out, 9);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "s,sp,re_K_0_0,im_K_0_0");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 81);
}
