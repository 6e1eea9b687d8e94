#include "densop/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace densop {

namespace {

using nlohmann::json;

Rational rational_from_json(const json& j, const std::string& what) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw ValidationError(what + " must be an integer or a rational string like \"1/2\"");
}

Expr expr_from_json(const json& j, int max_var, const std::string& what) {
  if (!j.is_string()) throw ValidationError(what + " must be an expression string");
  Expr e;
  try {
    e = parse_expression(j.get<std::string>());
  } catch (const ParseError& pe) {
    throw ValidationError(what + ": " + pe.what());
  }
  if (e.max_variable() > max_var)
    throw ValidationError(what + " uses variable x" + std::to_string(e.max_variable()) +
                          " beyond the scenario dimension");
  return e;
}

std::vector<int> parse_index_key(const std::string& key, std::size_t count, int dim,
                                 const std::string& what) {
  std::vector<int> idx;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, ','))
    idx.push_back(std::stoi(part));
  if (idx.size() != count)
    throw ValidationError(what + ": key \"" + key + "\" needs " + std::to_string(count) +
                          " comma-separated indices");
  for (int i : idx)
    if (i < 1 || i > dim)
      throw ValidationError(what + ": index " + std::to_string(i) + " out of range 1.." +
                            std::to_string(dim));
  return idx;
}

SampleDomain domain_from_json(const json* j, int dim) {
  double lo = 0.2, hi = 1.2;
  bool explicit_range = false;
  if (j) {
    if (j->contains("lo")) { lo = (*j)["lo"].get<double>(); explicit_range = true; }
    if (j->contains("hi")) { hi = (*j)["hi"].get<double>(); explicit_range = true; }
  }
  if (!explicit_range) {
    if (const char* env = std::getenv("DENSOP_SAMPLE_DOMAIN")) {
      std::string s(env);
      auto colon = s.find(':');
      if (colon == std::string::npos)
        throw ValidationError("DENSOP_SAMPLE_DOMAIN must look like \"0.2:1.2\"");
      lo = std::stod(s.substr(0, colon));
      hi = std::stod(s.substr(colon + 1));
    }
  }
  SampleDomain d = SampleDomain::box(dim + 1, lo, hi);
  if (j) {
    if (j->contains("samples")) d.samples = (*j)["samples"].get<int>();
    if (j->contains("tol")) d.tol = (*j)["tol"].get<double>();
    if (j->contains("seed")) d.seed = (*j)["seed"].get<std::uint64_t>();
    if (j->contains("intervals")) {
      for (const auto& [key, val] : (*j)["intervals"].items()) {
        if (key.size() < 2 || key[0] != 'x')
          throw ValidationError("sample_domain.intervals keys must be variable names like x1");
        int v = std::stoi(key.substr(1));
        if (v < 0 || v > dim)
          throw ValidationError("sample_domain.intervals: variable " + key + " out of range");
        d.intervals[v] = Interval{val.at(0).get<double>(), val.at(1).get<double>()};
      }
    }
    if (d.samples < 1) throw ValidationError("sample count must be >= 1");
    if (!(d.tol > 0)) throw ValidationError("tolerance must be positive");
  }
  for (const auto& iv : d.intervals)
    if (!(iv.lo < iv.hi)) throw ValidationError("sample domain has an empty interval");
  return d;
}

} // namespace

Rational parse_rational(const std::string& text) {
  Expr e = parse_expression(text);
  if (!e.is_constant())
    throw ValidationError("expected a rational constant, got \"" + text + "\"");
  return e.node().value;
}

ProjectiveClass Scenario::projective() const {
  if (pclass) return *pclass;
  return projective_class(*connection);
}

Connection Scenario::representative() const {
  if (connection) return *connection;
  return Connection(pclass->dim(), pclass->lo(),
                    [&] {
                      std::vector<Expr> c;
                      for (int k = pclass->lo(); k <= pclass->hi(); ++k)
                        for (int i = pclass->lo(); i <= pclass->hi(); ++i)
                          for (int j = pclass->lo(); j <= pclass->hi(); ++j)
                            c.push_back(pclass->at(k, i, j));
                      return c;
                    }());
}

bool Scenario::check_requested(const std::string& name) const {
  if (checks.empty()) return true;
  return std::find(checks.begin(), checks.end(), name) != checks.end();
}

Scenario parse_scenario_text(const std::string& json_text, const std::string& name_hint) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
  }

  Scenario sc;
  sc.name = j.value("name", name_hint);
  if (!j.contains("dimension")) throw ValidationError("scenario needs a \"dimension\"");
  sc.dim = j["dimension"].get<int>();
  if (sc.dim < 2) throw ValidationError("scenario dimension must be >= 2");
  const int n = sc.dim;

  sc.domain = domain_from_json(j.contains("sample_domain") ? &j["sample_domain"] : nullptr, n);

  if (j.contains("connection") == j.contains("projective_class"))
    throw ValidationError("scenario needs exactly one of \"connection\" / \"projective_class\"");

  if (j.contains("connection")) {
    Connection::Builder b(n, 1);
    for (const auto& [key, val] : j["connection"].items()) {
      auto idx = parse_index_key(key, 3, n, "connection");
      b.set(idx[0], idx[1], idx[2], expr_from_json(val, n, "connection[" + key + "]"));
    }
    sc.connection = b.build();
  } else {
    Connection::Builder b(n, 1);
    for (const auto& [key, val] : j["projective_class"].items()) {
      auto idx = parse_index_key(key, 3, n, "projective_class");
      b.set(idx[0], idx[1], idx[2], expr_from_json(val, n, "projective_class[" + key + "]"));
    }
    Connection c = b.build();
    std::vector<Expr> coeffs;
    for (int k = 1; k <= n; ++k)
      for (int i = 1; i <= n; ++i)
        for (int jj = 1; jj <= n; ++jj) coeffs.push_back(c.at(k, i, jj));
    ProjectiveClass p(n, 1, std::move(coeffs));
    p.validate_traces(sc.domain);
    sc.pclass = std::move(p);
  }

  if (j.contains("tensor_density")) {
    const auto& t = j["tensor_density"];
    Rational w = t.contains("weight") ? rational_from_json(t["weight"], "tensor weight")
                                      : Rational(0);
    TensorDensity2::Builder b(n, w, 1);
    if (!t.contains("components"))
      throw ValidationError("tensor_density needs \"components\"");
    for (const auto& [key, val] : t["components"].items()) {
      auto idx = parse_index_key(key, 2, n, "tensor_density");
      b.set(idx[0], idx[1], expr_from_json(val, n, "tensor_density[" + key + "]"));
    }
    sc.tensor = b.build();
  }

  if (j.contains("rho")) {
    const auto& r = j["rho"];
    sc.rho = Density{expr_from_json(r.at("coefficient"), n, "rho"),
                     rational_from_json(r.at("weight"), "rho weight")};
  }

  if (j.contains("densities")) {
    for (const auto& d : j["densities"])
      sc.densities.push_back(Density{expr_from_json(d.at("coefficient"), n, "density"),
                                     rational_from_json(d.at("weight"), "density weight")});
  }

  if (j.contains("transitions")) {
    for (const auto& t : j["transitions"]) {
      std::vector<Expr> fwd, inv;
      for (const auto& f : t.at("forward")) fwd.push_back(expr_from_json(f, n, "transition"));
      for (const auto& g : t.at("inverse")) inv.push_back(expr_from_json(g, n, "transition"));
      if (static_cast<int>(fwd.size()) != n || static_cast<int>(inv.size()) != n)
        throw ValidationError("transition needs exactly dimension-many forward and inverse maps");
      sc.transitions.emplace_back(n, 1, std::move(fwd), std::move(inv), sc.domain);
    }
  }

  if (j.contains("quadrature")) {
    const auto& q = j["quadrature"];
    if (q.contains("box")) {
      for (const auto& iv : q["box"])
        sc.quadrature.box.push_back(Interval{iv.at(0).get<double>(), iv.at(1).get<double>()});
    }
    if (q.contains("points_per_axis"))
      sc.quadrature.points_per_axis = q["points_per_axis"].get<int>();
  }
  if (sc.quadrature.box.empty())
    for (int a = 1; a <= n; ++a) sc.quadrature.box.push_back(sc.domain.intervals[a]);
  if (!j.contains("quadrature") || !j["quadrature"].contains("points_per_axis"))
    sc.quadrature.points_per_axis = n <= 2 ? 101 : 41;
  sc.quadrature.validate();
  if (static_cast<int>(sc.quadrature.box.size()) != n)
    throw ValidationError("quadrature box dimension does not match the scenario");

  if (j.contains("checks"))
    for (const auto& c : j["checks"]) sc.checks.push_back(c.get<std::string>());
  if (j.contains("expect_error")) sc.expect_error = j["expect_error"].get<std::string>();

  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string name = path;
  auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  auto dot = name.rfind(".json");
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_scenario_text(buf.str(), name);
}

} // namespace densop
