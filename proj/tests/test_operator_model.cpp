#include <doctest.h>

#include <cmath>
#include <random>

#include "heatdef/coefficient_model.hpp"
#include "heatdef/errors.hpp"
#include "heatdef/fourier_potential.hpp"
#include "heatdef/problem_io.hpp"
#include "test_helpers.hpp"

using namespace heatdef;

namespace {

RMatrix rot_beta() {
  RMatrix beta(2, 2);
  beta << 0.0, 1.0, -1.0, 0.0;
  return beta;
}

}  // namespace

TEST_CASE("coefficient evaluation for the builtin models") {
  auto free = CoefficientModel::free_model(1);
  auto c = eval_coefficients(free, Complex(0.3, 0.0));
  CHECK((c.A - identity(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.B.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.C.cwiseAbs().maxCoeff() == 0.0);

  auto harmonic = CoefficientModel::harmonic(1.0, 1);
  for (Complex t : {Complex(0.0, 0.0), Complex(0.2, 0.1), Complex(0.0, -0.4)}) {
    auto h = eval_coefficients(harmonic, t);
    CHECK((h.A - identity(1)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(h.B.cwiseAbs().maxCoeff() == 0.0);
    CHECK((h.C - identity(1)).cwiseAbs().maxCoeff() == 0.0);
  }

  auto magnetic = CoefficientModel::magnetic(rot_beta());
  auto m = eval_coefficients(magnetic, Complex(0.1, 0.0));
  CHECK((m.A - identity(2)).cwiseAbs().maxCoeff() == 0.0);
  CMatrix expected_b = Complex(0.0, -0.5) * rot_beta().cast<Complex>();
  CHECK((m.B - expected_b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.C.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evaluation outside the validity radius is rejected") {
  auto free = CoefficientModel::free_model(1);
  CHECK_THROWS_AS(eval_coefficients(free, Complex(1.0, 0.5)), OutOfRadiusError);
  CHECK_THROWS_AS(eval_coefficients(free, Complex(0.0, -1.0)), OutOfRadiusError);
}

TEST_CASE("structural validation rejects broken models") {
  // non-symmetric C
  CMatrix bad(2, 2);
  bad << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(CoefficientModel::custom(
                      2, MatrixPolynomial::constant(identity(2)),
                      MatrixPolynomial::zero(2, 2),
                      MatrixPolynomial::constant(bad), 1.0),
                  ParseError);
  // A(0) not positive definite
  CHECK_THROWS_AS(CoefficientModel::custom(
                      1, MatrixPolynomial::constant(-identity(1)),
                      MatrixPolynomial::zero(1, 1),
                      MatrixPolynomial::zero(1, 1), 1.0),
                  ParseError);
  // beta not skew
  RMatrix sym(2, 2);
  sym << 0.0, 1.0, 1.0, 0.0;
  CHECK_THROWS_AS(CoefficientModel::magnetic(sym), ParseError);
}

TEST_CASE("axis reality criterion") {
  CHECK(check_reality(CoefficientModel::free_model(2)).passed);
  CHECK(check_reality(CoefficientModel::magnetic(rot_beta())).passed);
  CHECK(check_reality(CoefficientModel::harmonic(2.5, 1)).passed);

  // A = 1 + t: rotated first-order coefficient is i, not real.
  auto drifting = CoefficientModel::custom(
      1, MatrixPolynomial({identity(1), identity(1)}),
      MatrixPolynomial::zero(1, 1), MatrixPolynomial::zero(1, 1), 1.0);
  auto report = check_reality(drifting);
  CHECK_FALSE(report.passed);
  REQUIRE(report.offenders.size() == 1);
  CHECK(report.offenders[0].which == 'A');
  CHECK(report.offenders[0].order == 1);

  // A = 1 + i t: i * (i) = -1 is real, so this passes.
  auto wick = CoefficientModel::custom(
      1, MatrixPolynomial({identity(1), Complex(0.0, 1.0) * identity(1)}),
      MatrixPolynomial::zero(1, 1), MatrixPolynomial::zero(1, 1), 1.0);
  CHECK(check_reality(wick).passed);
}

TEST_CASE("reality-passing coefficients are real on the imaginary axis") {
  for (const auto& model :
       {CoefficientModel::free_model(2), CoefficientModel::magnetic(rot_beta()),
        CoefficientModel::harmonic(1.5, 2)}) {
    REQUIRE(check_reality(model).passed);
    const Complex i(0.0, 1.0);
    for (double tau : {-0.4, -0.1, 0.05, 0.3}) {
      CHECK(model.A(i * tau).imag().cwiseAbs().maxCoeff() < 1e-12);
      CHECK((i * model.B(i * tau)).imag().cwiseAbs().maxCoeff() < 1e-12);
      CHECK(model.C(i * tau).imag().cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("coefficient polynomials satisfy the Cauchy-Riemann equations") {
  auto model = CoefficientModel::custom(
      1,
      MatrixPolynomial({identity(1), Complex(0.0, 1.0) * identity(1),
                        Complex(-0.25, 0.0) * identity(1)}),
      MatrixPolynomial::zero(1, 1), MatrixPolynomial::zero(1, 1), 1.0);
  const double h = 1e-6;
  for (Complex t : {Complex(0.2, 0.1), Complex(-0.3, 0.25)}) {
    CMatrix dre = (model.A(t + h) - model.A(t - h)) / (2.0 * h);
    CMatrix dim =
        (model.A(t + Complex(0.0, h)) - model.A(t - Complex(0.0, h))) /
        (2.0 * h);
    CMatrix wirtinger = 0.5 * (dre + Complex(0.0, 1.0) * dim);
    CHECK(wirtinger.cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("potential evaluation") {
  CVector x(1);
  x[0] = Complex(0.7, 0.0);

  auto zero = FourierPotential::zero(1);
  CHECK(zero.eval(Complex(0.1, 0.0), x).cwiseAbs().maxCoeff() == 0.0);

  CMatrix a(1, 1);
  a(0, 0) = Complex(2.0, -1.0);
  auto constant = FourierPotential::constant(a);
  for (Complex t : {Complex(0.0, 0.0), Complex(0.2, 0.3)}) {
    CHECK((constant.eval(t, x) - a).cwiseAbs().maxCoeff() < 1e-15);
  }

  RVector xi(1);
  xi[0] = 2.0;
  auto cosine = FourierPotential::cosine(1.0, xi);
  for (double xv : {-1.2, 0.0, 0.4, 2.0}) {
    x[0] = xv;
    CHECK(cosine.eval(Complex(0.1, 0.0), x)(0, 0).real() ==
          doctest::Approx(std::cos(2.0 * xv)).epsilon(1e-14));
    CHECK(std::abs(cosine.eval(Complex(0.1, 0.0), x)(0, 0).imag()) < 1e-15);
  }
}

TEST_CASE("real-symmetric scalar mode pairs give real potentials on the real "
          "axis") {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 25; ++rep) {
    const double xi_val = testing::urand(gen, -3.0, 3.0);
    const Complex amp(testing::urand(gen, -1.0, 1.0),
                      testing::urand(gen, -1.0, 1.0));
    FourierPotential pot;
    pot.d = 1;
    RVector xi(1);
    xi[0] = xi_val;
    CMatrix a(1, 1);
    a(0, 0) = amp;
    CMatrix a_conj(1, 1);
    a_conj(0, 0) = std::conj(amp);
    pot.modes.push_back({xi, MatrixPolynomial::constant(a)});
    pot.modes.push_back({-xi, MatrixPolynomial::constant(a_conj)});
    CVector x(1);
    x[0] = testing::urand(gen, -5.0, 5.0);
    const Complex value = pot.eval(Complex(0.3, 0.0), x)(0, 0);
    CHECK(std::abs(value.imag()) < 1e-12);
  }
}

TEST_CASE("moment bound") {
  CHECK(moment_bound(FourierPotential::zero(1), 3.0, 0.5) == 0.0);

  CMatrix two(1, 1);
  two(0, 0) = 2.0;
  CHECK(moment_bound(FourierPotential::constant(two), 17.0, 0.5) ==
        doctest::Approx(2.0).epsilon(1e-12));

  RVector xi(1);
  xi[0] = 1.0;
  auto cosine = FourierPotential::cosine(1.0, xi);
  CHECK(moment_bound(cosine, 1.0, 0.5) ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("moment bound dominates the sampled sup for polynomial amplitudes") {
  // amplitude a(t) = 1 + 2t: sup on |t| <= T is 1 + 2T
  CMatrix one(1, 1), twoc(1, 1);
  one(0, 0) = 1.0;
  twoc(0, 0) = 2.0;
  FourierPotential pot;
  pot.d = 1;
  RVector xi(1);
  xi[0] = 0.0;
  pot.modes.push_back({xi, MatrixPolynomial({one, twoc})});
  // upper bound: true sup plus the documented arc correction
  // (pi T / samples) * sup |a'| = pi * 0.25 / 64 * 2 ~ 0.0245
  const double bound = moment_bound(pot, 5.0, 0.25);
  CHECK(bound >= 1.5);
  CHECK(bound <= 1.5 + 0.03);
}

TEST_CASE("problem files parse and round-trip") {
  Problem p = load_problem(std::string(HEATDEF_PROBLEM_DIR) + "/free_cos.json");
  CHECK(p.model.nu == 1);
  CHECK(p.model.name == "free");
  CHECK(p.potential.modes.size() == 2);
  CVector x(1);
  x[0] = 0.9;
  CHECK(p.potential.eval(Complex(0.0, 0.0), x)(0, 0).real() ==
        doctest::Approx(0.5 * std::cos(0.9)).epsilon(1e-14));

  Problem q = parse_problem(problem_to_json(p));
  CHECK(q.model.nu == p.model.nu);
  CHECK((q.model.A(Complex(0.2, 0.1)) - p.model.A(Complex(0.2, 0.1)))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  CHECK(q.potential.modes.size() == p.potential.modes.size());

  CHECK_THROWS_AS(parse_problem("{ not json"), ParseError);
  CHECK_THROWS_AS(parse_problem("{\"nu\": 1}"), ParseError);  // no model at all
  CHECK_THROWS_AS(
      parse_problem("{\"nu\": 2, \"model\": {\"builtin\": \"nope\"}}"),
      ParseError);
}

TEST_CASE("magnetic problem file matches the builtin") {
  Problem p = load_problem(std::string(HEATDEF_PROBLEM_DIR) + "/magnetic.json");
  auto builtin = CoefficientModel::magnetic(rot_beta());
  for (Complex t : {Complex(0.0, 0.0), Complex(0.3, 0.2)}) {
    CHECK((p.model.B(t) - builtin.B(t)).cwiseAbs().maxCoeff() < 1e-15);
  }
}
