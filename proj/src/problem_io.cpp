#include "heatdef/problem_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "heatdef/errors.hpp"

namespace heatdef {

namespace {

using nlohmann::json;

Complex parse_complex(const json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2)
    return Complex(j[0].get<double>(), j[1].get<double>());
  throw ParseError("expected a number or [re, im] pair");
}

CMatrix parse_matrix(const json& j) {
  if (!j.is_array() || j.empty())
    throw ParseError("expected a non-empty matrix (array of rows)");
  const auto rows = j.size();
  const auto cols = j[0].size();
  CMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = parse_complex(j[r][c]);
  }
  return m;
}

MatrixPolynomial parse_taylor(const json& j) {
  if (!j.is_array() || j.empty())
    throw ParseError("taylor: expected a non-empty array of matrices");
  std::vector<CMatrix> coeffs;
  coeffs.reserve(j.size());
  for (const auto& entry : j) coeffs.push_back(parse_matrix(entry));
  return MatrixPolynomial(std::move(coeffs));
}

RMatrix parse_real_matrix(const json& j) {
  CMatrix m = parse_matrix(j);
  if (m.imag().cwiseAbs().maxCoeff() > 0.0)
    throw ParseError("expected a real matrix");
  return m.real();
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

json taylor_to_json(const MatrixPolynomial& p) {
  json orders = json::array();
  for (const auto& c : p.coefficients()) orders.push_back(matrix_to_json(c));
  return orders;
}

}  // namespace

Problem parse_problem(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  try {
    if (!j.contains("nu")) throw ParseError("missing field: nu");
    const int nu = j.at("nu").get<int>();
    double radius = j.value("validity_radius", 1.0);

    CoefficientModel model;
    bool have_model = false;
    if (j.contains("model")) {
      const auto& jm = j.at("model");
      const std::string builtin = jm.at("builtin").get<std::string>();
      if (builtin == "free") {
        model = CoefficientModel::free_model(nu);
      } else if (builtin == "harmonic") {
        model = CoefficientModel::harmonic(jm.at("lambda").get<double>(), nu);
      } else if (builtin == "magnetic") {
        model = CoefficientModel::magnetic(parse_real_matrix(jm.at("beta")));
        if (model.nu != nu) throw ParseError("magnetic beta dimension != nu");
      } else {
        throw ParseError("unknown builtin model: " + builtin);
      }
      model.validity_radius = radius;
      have_model = true;
    }
    // Per-coefficient Taylor overrides (the custom-polynomial route).
    MatrixPolynomial A = have_model ? model.A
                                    : MatrixPolynomial::constant(identity(nu));
    MatrixPolynomial B = have_model ? model.B : MatrixPolynomial::zero(nu, nu);
    MatrixPolynomial C = have_model ? model.C : MatrixPolynomial::zero(nu, nu);
    bool any_custom = false;
    if (j.contains("A")) { A = parse_taylor(j.at("A").at("taylor")); any_custom = true; }
    if (j.contains("B")) { B = parse_taylor(j.at("B").at("taylor")); any_custom = true; }
    if (j.contains("C")) { C = parse_taylor(j.at("C").at("taylor")); any_custom = true; }
    if (!have_model && !any_custom)
      throw ParseError("missing coefficients: give \"model\" or A/B/C Taylor data");
    if (!have_model || any_custom) {
      std::string name = have_model ? model.name + "-modified" : "custom";
      model = CoefficientModel::custom(nu, std::move(A), std::move(B),
                                       std::move(C), radius, name);
    }

    FourierPotential pot = FourierPotential::zero(1);
    if (j.contains("potential")) {
      const auto& jp = j.at("potential");
      pot.d = jp.value("d", 1);
      if (jp.contains("modes")) {
        for (const auto& jmode : jp.at("modes")) {
          FourierMode mode;
          const auto& jxi = jmode.at("xi");
          mode.xi = RVector(jxi.size());
          for (std::size_t k = 0; k < jxi.size(); ++k)
            mode.xi[static_cast<Eigen::Index>(k)] = jxi[k].get<double>();
          mode.amplitude = parse_taylor(jmode.at("amplitude_taylor"));
          pot.modes.push_back(std::move(mode));
        }
      }
      pot.validate(nu);
    }
    return Problem{std::move(model), std::move(pot)};
  } catch (const json::exception& e) {
    throw ParseError(std::string("problem schema error: ") + e.what());
  }
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

std::string problem_to_json(const Problem& problem) {
  json j;
  j["nu"] = problem.model.nu;
  j["validity_radius"] = problem.model.validity_radius;
  j["A"] = {{"taylor", taylor_to_json(problem.model.A)}};
  j["B"] = {{"taylor", taylor_to_json(problem.model.B)}};
  j["C"] = {{"taylor", taylor_to_json(problem.model.C)}};
  json modes = json::array();
  for (const auto& mode : problem.potential.modes) {
    json jxi = json::array();
    for (Eigen::Index k = 0; k < mode.xi.size(); ++k) jxi.push_back(mode.xi[k]);
    modes.push_back({{"xi", jxi},
                     {"amplitude_taylor", taylor_to_json(mode.amplitude)}});
  }
  j["potential"] = {{"d", problem.potential.d}, {"modes", modes}};
  return j.dump(2);
}

}  // namespace heatdef
