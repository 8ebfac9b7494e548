#pragma once

#include <iosfwd>
#include <string>

#include "heatdef/coefficient_model.hpp"
#include "heatdef/fourier_potential.hpp"

namespace heatdef {

/// A full problem definition: the quadratic operator plus the trigonometric
/// perturbation.
struct Problem {
  CoefficientModel model;
  FourierPotential potential;
};

/// Parses the JSON problem format (see README for the schema). Throws
/// ParseError on malformed input.
Problem load_problem(const std::string& path);
Problem parse_problem(const std::string& json_text);

/// Serializes back to the same schema (Taylor form, builtins are expanded).
std::string problem_to_json(const Problem& problem);

}  // namespace heatdef
