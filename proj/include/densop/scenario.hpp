#ifndef DENSOP_SCENARIO_HPP
#define DENSOP_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include "densop/verify.hpp"

namespace densop {

// A fully validated problem instance loaded from a scenario file. All
// mathematical fields in the file are strings in the expression grammar; the
// container is JSON. Exactly one of `connection` / `pclass` is present.
struct Scenario {
  std::string name;
  int dim = 0;
  std::optional<Connection> connection;
  std::optional<ProjectiveClass> pclass;
  std::optional<TensorDensity2> tensor;
  std::optional<Density> rho;
  std::vector<Density> densities;
  std::vector<ChartTransition> transitions;
  SampleDomain domain;
  verify::QuadratureSpec quadrature;
  std::vector<std::string> checks;  // empty means the full battery
  std::optional<std::string> expect_error;

  // The projective class: the explicit one, or the trace adjustment of the
  // connection.
  ProjectiveClass projective() const;
  // A torsion-free representative of the class (the given connection, or the
  // class coefficients themselves).
  Connection representative() const;

  bool check_requested(const std::string& name) const;
};

// Parse a rational literal through the expression grammar ("1/2", "0.25", "3").
Rational parse_rational(const std::string& text);

Scenario load_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& json_text, const std::string& name_hint = "");

} // namespace densop

#endif
