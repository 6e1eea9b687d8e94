#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "densop/scenario.hpp"
#include "densop/verify.hpp"

namespace py = pybind11;
using namespace densop;

namespace {

Rational to_rational(py::handle h) {
  if (py::isinstance<py::int_>(h)) return Rational(h.cast<long long>());
  if (py::isinstance<py::str>(h)) return parse_rational(h.cast<std::string>());
  if (py::hasattr(h, "numerator") && py::hasattr(h, "denominator"))
    return Rational(h.attr("numerator").cast<long long>(),
                    h.attr("denominator").cast<long long>());
  if (py::isinstance<py::float_>(h)) {
    double v = h.cast<double>();
    long long scaled = static_cast<long long>(v * (1 << 20));
    if (static_cast<double>(scaled) == v * (1 << 20)) return Rational(scaled, 1 << 20);
    throw py::value_error("weight is not an exact small dyadic; pass a string like \"1/3\"");
  }
  throw py::type_error("expected int, rational string, or fractions.Fraction");
}

std::vector<int> split_key(const std::string& key, std::size_t count) {
  std::vector<int> idx;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, ',')) idx.push_back(std::stoi(part));
  if (idx.size() != count) throw py::value_error("component key \"" + key + "\" is malformed");
  return idx;
}

Connection connection_from_map(int n, const std::map<std::string, std::string>& comps) {
  Connection::Builder b(n, 1);
  for (const auto& [key, text] : comps) {
    auto idx = split_key(key, 3);
    b.set(idx[0], idx[1], idx[2], parse_expression(text));
  }
  return b.build();
}

ProjectiveClass class_from_map(int n, const std::map<std::string, std::string>& comps,
                               const SampleDomain& dom) {
  Connection c = connection_from_map(n, comps);
  std::vector<Expr> v;
  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) v.push_back(c.at(k, i, j));
  ProjectiveClass p(n, 1, std::move(v));
  p.validate_traces(dom);
  return p;
}

TensorDensity2 tensor_from_map(int n, const std::map<std::string, std::string>& comps,
                               py::handle weight) {
  TensorDensity2::Builder b(n, to_rational(weight), 1);
  for (const auto& [key, text] : comps) {
    auto idx = split_key(key, 2);
    b.set(idx[0], idx[1], parse_expression(text));
  }
  return b.build();
}

} // namespace

PYBIND11_MODULE(_densop, m) {
  m.doc() = "canonical second-order operators and brackets on density algebras";

  py::register_exception<DomainError>(m, "DomainError");
  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<ResonantWeight>(m, "ResonantWeightError");
  py::register_exception<ShiftedResonance>(m, "ShiftedResonanceError");
  py::register_exception<NonpositiveDensity>(m, "NonpositiveDensityError");

  py::class_<Rational>(m, "Rational")
      .def(py::init([](py::handle h) { return to_rational(h); }))
      .def_property_readonly("numerator", &Rational::num)
      .def_property_readonly("denominator", &Rational::den)
      .def("__float__", &Rational::to_double)
      .def("__str__", &Rational::str)
      .def("__repr__", [](const Rational& r) { return "Rational(" + r.str() + ")"; })
      .def("__eq__", [](const Rational& a, const Rational& b) { return a == b; });

  py::class_<Expr>(m, "Expr")
      .def("diff", &Expr::diff, py::arg("var"))
      .def("eval",
           [](const Expr& e, const std::vector<double>& point) {
             return e.eval(std::span<const double>(point.data(), point.size()));
           })
      .def("substitute", &Expr::substitute)
      .def("size", &Expr::size)
      .def("max_variable", &Expr::max_variable)
      .def("is_zero", &Expr::is_zero)
      .def("latex", &Expr::latex)
      .def("__str__", &Expr::str)
      .def("__repr__", [](const Expr& e) { return "parse(\"" + e.str() + "\")"; })
      .def("__add__", [](const Expr& a, const Expr& b) { return a + b; })
      .def("__sub__", [](const Expr& a, const Expr& b) { return a - b; })
      .def("__mul__", [](const Expr& a, const Expr& b) { return a * b; })
      .def("__truediv__", [](const Expr& a, const Expr& b) { return a / b; })
      .def("__neg__", [](const Expr& a) { return -a; })
      .def("__pow__", [](const Expr& a, long long k) { return Expr::power(a, k); });

  m.def("parse", &parse_expression, py::arg("text"), "parse an expression string");
  m.def("variable", &Expr::variable, py::arg("index"));
  m.def("constant", [](py::handle h) { return Expr::constant(to_rational(h)); });

  py::class_<SampleDomain>(m, "SampleDomain")
      .def(py::init([](int nvars, double lo, double hi, int samples, double tol,
                       std::uint64_t seed) {
             return SampleDomain::box(nvars, lo, hi, samples, tol, seed);
           }),
           py::arg("nvars"), py::arg("lo") = 0.2, py::arg("hi") = 1.2, py::arg("samples") = 20,
           py::arg("tol") = 1e-9, py::arg("seed") = 9001)
      .def_readwrite("samples", &SampleDomain::samples)
      .def_readwrite("tol", &SampleDomain::tol)
      .def_readwrite("seed", &SampleDomain::seed)
      .def("points", &SampleDomain::points);

  m.def("equal_prob", &equal_prob, py::arg("e1"), py::arg("e2"), py::arg("domain"));
  m.def("max_defect", &max_defect, py::arg("e1"), py::arg("e2"), py::arg("domain"));

  py::class_<Density>(m, "Density")
      .def(py::init([](py::handle coef, py::handle weight) {
             Expr e = py::isinstance<py::str>(coef) ? parse_expression(coef.cast<std::string>())
                                                    : coef.cast<Expr>();
             return Density{e, to_rational(weight)};
           }),
           py::arg("coefficient"), py::arg("weight"))
      .def_readonly("coefficient", &Density::coefficient)
      .def_readonly("weight", &Density::weight)
      .def("__repr__", [](const Density& d) {
        return "Density(\"" + d.coefficient.str() + "\", \"" + d.weight.str() + "\")";
      });
  m.def("density_mul", &density_mul);

  py::class_<Connection>(m, "Connection")
      .def(py::init(&connection_from_map), py::arg("dimension"), py::arg("components"))
      .def_property_readonly("dimension", &Connection::dim)
      .def("at", &Connection::at, py::arg("k"), py::arg("i"), py::arg("j"))
      .def_static("zero", [](int n) { return Connection::zero(n); });

  py::class_<ProjectiveClass, Connection>(m, "ProjectiveClass")
      .def(py::init(&class_from_map), py::arg("dimension"), py::arg("components"),
           py::arg("domain"))
      .def_static("zero", [](int n) { return ProjectiveClass::zero(n); })
      .def("trace_defect", &ProjectiveClass::trace_defect);

  py::class_<TensorDensity2>(m, "TensorDensity2")
      .def(py::init(&tensor_from_map), py::arg("dimension"), py::arg("components"),
           py::arg("weight"))
      .def_static("kronecker",
                  [](int n, py::handle w) {
                    return TensorDensity2::kronecker(n, to_rational(w));
                  },
                  py::arg("dimension"), py::arg("weight") = py::int_(0))
      .def_property_readonly("dimension", &TensorDensity2::dim)
      .def_property_readonly("weight", &TensorDensity2::weight)
      .def("at", &TensorDensity2::at, py::arg("i"), py::arg("j"));

  py::class_<ChartTransition>(m, "ChartTransition")
      .def(py::init([](int n, const std::vector<std::string>& fwd,
                       const std::vector<std::string>& inv, const SampleDomain& dom) {
             std::vector<Expr> f, g;
             for (const auto& s : fwd) f.push_back(parse_expression(s));
             for (const auto& s : inv) g.push_back(parse_expression(s));
             return ChartTransition(n, 1, std::move(f), std::move(g), dom);
           }),
           py::arg("dimension"), py::arg("forward"), py::arg("inverse"), py::arg("domain"))
      .def_property_readonly("dimension", &ChartTransition::dim)
      .def("jacobian_det", &ChartTransition::jacobian_det)
      .def("to_new_chart", &ChartTransition::to_new_chart)
      .def("to_old_chart", &ChartTransition::to_old_chart)
      .def("push", &ChartTransition::push);

  py::class_<OperatorDescriptor>(m, "OperatorDescriptor")
      .def("S", &OperatorDescriptor::S, py::arg("i"), py::arg("j"))
      .def("A", &OperatorDescriptor::A, py::arg("i"))
      .def("apply_to", &OperatorDescriptor::apply_to);

  py::class_<DensityBracket>(m, "DensityBracket")
      .def_property_readonly("dimension", [](const DensityBracket& b) { return b.dim; })
      .def_readonly("weight", &DensityBracket::weight)
      .def_readonly("theta", &DensityBracket::theta)
      .def("S", &DensityBracket::S, py::arg("i"), py::arg("j"))
      .def("gamma", &DensityBracket::G, py::arg("i"));

  py::class_<DensityOperator>(m, "DensityOperator")
      .def_property_readonly("dimension", [](const DensityOperator& o) { return o.dim; })
      .def_readonly("weight", &DensityOperator::weight)
      .def_readonly("theta", &DensityOperator::theta)
      .def_readonly("b", &DensityOperator::b)
      .def_readonly("c", &DensityOperator::c)
      .def_readonly("resonance_warning", &DensityOperator::resonance_warning)
      .def("S", &DensityOperator::S, py::arg("i"), py::arg("j"))
      .def("gamma", &DensityOperator::G, py::arg("i"))
      .def("a", &DensityOperator::A, py::arg("i"))
      .def("bracket_part", &DensityOperator::bracket_part);

  m.def("projective_class", &projective_class, py::arg("connection"));
  m.def("transform_connection", &transform_connection);
  m.def("transform_tensor_density", &transform_tensor_density);
  m.def("transform_density", &transform_density);
  m.def("projective_laplacian", &projective_laplacian, py::arg("tensor"), py::arg("pclass"));
  m.def("upper_connection", &upper_connection, py::arg("tensor"), py::arg("pclass"));

  m.def("lift_connection", &lift_connection, py::arg("pclass"));
  m.def("induced_projective_class", &induced_projective_class, py::arg("pclass"));
  m.def("tilde_transition",
        [](const ChartTransition& base) { return tilde_transition(base).chart(); },
        py::arg("base"), "extended-chart transition as a ChartTransition on x0..xn");
  m.def("embed_density", &embed_density, py::arg("density"));

  m.def("gamma_theta",
        [](const TensorDensity2& s, const ProjectiveClass& p) {
          GammaTheta gt = gamma_theta(s, p);
          return py::make_tuple(gt.gamma, gt.theta, gt.warning);
        },
        py::arg("tensor"), py::arg("pclass"));
  m.def("canonical_operator", &canonical_operator, py::arg("bracket"));
  m.def("explicit_operator", &explicit_operator, py::arg("bracket"), py::arg("pclass"));
  m.def("main_operator", &main_operator, py::arg("tensor"), py::arg("pclass"));
  m.def("tilde_operator_via_lift",
        [](const DensityBracket& br, const ProjectiveClass& p,
           std::optional<SampleDomain> dom) { return tilde_operator_via_lift(br, p, dom); },
        py::arg("bracket"), py::arg("pclass"), py::arg("grading_check") = py::none());
  m.def("extend_bracket", &extend_bracket, py::arg("tensor"), py::arg("pclass"));
  m.def("rho_sigma_operator", &rho_sigma_operator, py::arg("tensor"), py::arg("pclass"),
        py::arg("rho"), py::arg("domain"));
  m.def("flat_density_bracket", &flat_density_bracket, py::arg("tensor"), py::arg("rho1"),
        py::arg("domain"));

  m.def("apply", &apply, py::arg("operator"), py::arg("density"));
  m.def("generated_bracket", &generated_bracket, py::arg("operator"), py::arg("d1"),
        py::arg("d2"));
  m.def("bracket_apply", &bracket_apply, py::arg("bracket"), py::arg("d1"), py::arg("d2"));

  // quadrature-backed checks
  py::class_<verify::QuadratureSpec>(m, "QuadratureSpec")
      .def(py::init([](const std::vector<std::pair<double, double>>& box, int pts) {
             verify::QuadratureSpec q;
             for (auto [lo, hi] : box) q.box.push_back(Interval{lo, hi});
             q.points_per_axis = pts;
             q.validate();
             return q;
           }),
           py::arg("box"), py::arg("points_per_axis") = 101);

  py::class_<verify::Bump>(m, "Bump")
      .def_readonly("density", &verify::Bump::density);
  m.def("make_bump",
        [](const std::vector<std::string>& center, py::handle radius, py::handle weight) {
          std::vector<Rational> c;
          for (const auto& s : center) c.push_back(parse_rational(s));
          return verify::make_bump(c, to_rational(radius), to_rational(weight));
        },
        py::arg("center"), py::arg("radius"), py::arg("weight"));

  m.def("scalar_product",
        [](const Density& a, const Density& b, const verify::QuadratureSpec& q) {
          return verify::scalar_product(a, b, q);
        });
  m.def("scalar_product_bumps",
        [](const verify::Bump& a, const verify::Bump& b, const verify::QuadratureSpec& q) {
          return verify::scalar_product(a, b, q);
        });
  m.def("modified_scalar_product",
        [](const Density& a, const Density& b, const Density& rho,
           const verify::QuadratureSpec& q) {
          return verify::modified_scalar_product(a, b, rho, q);
        });

  py::class_<verify::SelfAdjointnessReport>(m, "SelfAdjointnessReport")
      .def_readonly("defects", &verify::SelfAdjointnessReport::defects)
      .def_readonly("worst", &verify::SelfAdjointnessReport::worst);
  m.def("check_self_adjoint",
        [](const DensityOperator& op, py::handle mu, const verify::QuadratureSpec& q, int pairs,
           std::uint64_t seed) {
          return verify::check_self_adjoint(op, to_rational(mu), q, pairs, seed);
        },
        py::arg("operator"), py::arg("mu"), py::arg("quadrature"), py::arg("pairs") = 5,
        py::arg("seed") = 9001);
  m.def("perturbation_probe_defect",
        [](const DensityOperator& op, py::handle mu, const verify::QuadratureSpec& q) {
          return verify::perturbation_probe_defect(op, to_rational(mu), q);
        });

  py::class_<verify::CheckResult>(m, "CheckResult")
      .def_readonly("name", &verify::CheckResult::name)
      .def_readonly("worst_defect", &verify::CheckResult::worst_defect)
      .def_readonly("tolerance", &verify::CheckResult::tolerance)
      .def_readonly("detail", &verify::CheckResult::detail)
      .def("passed", &verify::CheckResult::passed);
  m.def("check_generates", &verify::check_generates, py::arg("operator"), py::arg("bracket"),
        py::arg("domain"));
  m.def("check_biderivation", &verify::check_biderivation, py::arg("bracket"),
        py::arg("domain"));

  py::class_<verify::Report>(m, "Report")
      .def_readonly("scenario", &verify::Report::scenario)
      .def_readonly("checks", &verify::Report::checks)
      .def("all_pass", &verify::Report::all_pass)
      .def("text", &verify::Report::text);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_property_readonly("dimension", [](const Scenario& s) { return s.dim; })
      .def_readonly("tensor", &Scenario::tensor)
      .def_readonly("rho", &Scenario::rho)
      .def_readonly("densities", &Scenario::densities)
      .def_readonly("domain", &Scenario::domain)
      .def("projective", &Scenario::projective);
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("run_invariance_battery", &verify::run_invariance_battery, py::arg("scenario"));
}
