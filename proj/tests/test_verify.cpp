#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "densop/scenario.hpp"
#include "densop/verify.hpp"
#include "testutil.hpp"

using namespace densop;
using namespace densop::verify;
using namespace densop::testutil;

namespace {

const SampleDomain dom2 = SampleDomain::box(3);

QuadratureSpec box2(int pts = 101) {
  QuadratureSpec q;
  q.box = {Interval{0.2, 1.2}, Interval{0.2, 1.2}};
  q.points_per_axis = pts;
  return q;
}

// independent oracle: nested 1d adaptive Simpson, test-only code path
double adaptive_1d(const std::function<double(double)>& f, double a, double b, double tol,
                   int depth = 24) {
  auto simpson = [&](double lo, double hi) {
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f((lo + hi) / 2) + f(hi));
  };
  std::function<double(double, double, double, double, int)> rec =
      [&](double lo, double hi, double whole, double eps, int d) -> double {
    double mid = (lo + hi) / 2;
    double left = simpson(lo, mid), right = simpson(mid, hi);
    if (d <= 0 || std::abs(left + right - whole) <= 15 * eps)
      return left + right + (left + right - whole) / 15.0;
    return rec(lo, mid, left, eps / 2, d - 1) + rec(mid, hi, right, eps / 2, d - 1);
  };
  return rec(a, b, simpson(a, b), tol, depth);
}

double adaptive_2d(const std::function<double(double, double)>& f, const QuadratureSpec& q,
                   double tol) {
  auto outer = [&](double x1) {
    return adaptive_1d([&](double x2) { return f(x1, x2); }, q.box[1].lo, q.box[1].hi, tol);
  };
  return adaptive_1d(outer, q.box[0].lo, q.box[0].hi, tol);
}

double masked_eval(const Bump& b, double x1, double x2) {
  double r2 = 0.0;
  double d1 = (x1 - b.support.center[0]) / b.support.radius;
  double d2 = (x2 - b.support.center[1]) / b.support.radius;
  r2 = d1 * d1 + d2 * d2;
  if (r2 >= 1.0 - 1e-12) return 0.0;
  return b.density.coefficient.eval({0.0, x1, x2});
}

} // namespace

TEST_CASE("quadrature spec validation") {
  QuadratureSpec q = box2();
  CHECK_NOTHROW(q.validate());
  q.points_per_axis = 100;
  CHECK_THROWS_AS(q.validate(), ValidationError);
  q.points_per_axis = 9;
  CHECK_THROWS_AS(q.validate(), ValidationError);
  q.points_per_axis = 11;
  CHECK_NOTHROW(q.validate());
  q.box.clear();
  CHECK_THROWS_AS(q.validate(), ValidationError);
}

TEST_CASE("simpson integrates low-degree polynomials exactly") {
  QuadratureSpec q;
  q.box = {Interval{0.0, 1.0}, Interval{0.0, 1.0}};
  q.points_per_axis = 11;
  double got = integrate({Factor(parse_expression("x1^2*x2"))}, q);
  CHECK(got == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  double cube = integrate({Factor(parse_expression("x1^3"))}, q);
  CHECK(cube == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("bump construction and support validation") {
  Bump b = make_bump({Rational(7, 10), Rational(7, 10)}, Rational(1, 4), Rational(1, 3));
  CHECK(b.density.weight == Rational(1, 3));
  // value at the center is e^{-1}
  CHECK(b.density.coefficient.eval({0.0, 0.7, 0.7}) == doctest::Approx(std::exp(-1.0)));

  QuadratureSpec q = box2();
  CHECK_NOTHROW(integrate({Factor(b)}, q));

  // support escaping the box is rejected
  Bump wide = make_bump({Rational(7, 10), Rational(7, 10)}, Rational(2), Rational(0));
  CHECK_THROWS_AS(integrate({Factor(wide)}, q), ValidationError);

  Bump shifted = make_bump({Rational(1, 10), Rational(7, 10)}, Rational(1, 4), Rational(0));
  CHECK_THROWS_AS(integrate({Factor(shifted)}, q), ValidationError);
}

TEST_CASE("random bumps are deterministic and interior") {
  QuadratureSpec q = box2();
  Bump a1 = random_bump(q, Rational(1, 2), 42);
  Bump a2 = random_bump(q, Rational(1, 2), 42);
  CHECK(a1.support.center == a2.support.center);
  CHECK(a1.support.radius == a2.support.radius);
  for (int i = 0; i < 2; ++i) {
    CHECK(a1.support.center[i] - a1.support.radius > q.box[i].lo);
    CHECK(a1.support.center[i] + a1.support.radius < q.box[i].hi);
  }
}

TEST_CASE("scalar product: weight gate") {
  const Density f{parse_expression("x1"), Rational(0)};
  const Density g{parse_expression("x2"), Rational(0)};
  QuadratureSpec q = box2(11);
  CHECK(scalar_product(f, g, q) == 0.0);  // weights sum to 0, not 1

  const Density h{parse_expression("x2"), Rational(1)};
  CHECK(scalar_product(f, h, q) != 0.0);
}

TEST_CASE("scalar product of a bump against the volume matches adaptive quadrature") {
  QuadratureSpec q = box2(101);
  Bump phi = make_bump({Rational(7, 10), Rational(3, 5)}, Rational(3, 10), Rational(0));
  Density vol{Expr::integer(1), Rational(1)};

  double got = scalar_product(phi, vol, q);
  double want = adaptive_2d([&](double x1, double x2) { return masked_eval(phi, x1, x2); }, q,
                            1e-11);
  CHECK(got == doctest::Approx(want).epsilon(1e-6));
  CHECK(got > 0.0);
}

TEST_CASE("pairing associativity over multiplication") {
  QuadratureSpec q = box2(41);
  for (std::uint64_t seed : {11, 12, 13}) {
    RandomExprGen g(2, seed);
    Density a{g.polynomial(), Rational(1, 2)};
    Density b{g.polynomial(), Rational(1, 3)};
    Density c{g.polynomial(), Rational(1, 6)};
    double lhs = scalar_product(a, density_mul(b, c), q);
    double rhs = scalar_product(density_mul(a, b), c, q);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(lhs != 0.0);
  }
}

TEST_CASE("modified scalar product") {
  QuadratureSpec q = box2(41);
  Density rho1{Expr::integer(1), Rational(0)};
  Density f{parse_expression("x1"), Rational(1, 2)};
  Density g{parse_expression("x2"), Rational(1, 2)};
  CHECK(modified_scalar_product(f, g, rho1, q) ==
        doctest::Approx(scalar_product(f, g, q)).epsilon(1e-13));

  // sigma = 1, mu1 = mu2 = 0: integral of f g rho
  Density rho{parse_expression("exp(x1)"), Rational(1)};
  Density f0{parse_expression("x1"), Rational(0)};
  Density g0{parse_expression("x2"), Rational(0)};
  double got = modified_scalar_product(f0, g0, rho, q);
  double want = adaptive_2d(
      [&](double x1, double x2) { return x1 * x2 * std::exp(x1); }, q, 1e-11);
  CHECK(got == doctest::Approx(want).epsilon(1e-8));

  // invariance axiom for the twisted pairing
  for (std::uint64_t seed : {21, 22}) {
    RandomExprGen gen(2, seed);
    Density a{gen.polynomial(), Rational(1, 4)};
    Density b{gen.polynomial(), Rational(1, 4)};
    Density c{gen.polynomial(), Rational(-1, 4) + Rational(1, 4)};  // weight 0
    // weights: 1/4 + 1/4 + 0 + sigma(1/2) = 1
    Density rho_s{parse_expression("exp(x1/2)"), Rational(1, 2)};
    double lhs = modified_scalar_product(a, density_mul(b, c), rho_s, q);
    double rhs = modified_scalar_product(density_mul(a, b), c, rho_s, q);
    CHECK(std::abs(lhs - rhs) <= 1e-6 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("self-adjointness of the canonical operator, flat and curved") {
  QuadratureSpec q = box2(101);

  TensorDensity2 flat = TensorDensity2::kronecker(2, Rational(0));
  DensityOperator op = main_operator(flat, ProjectiveClass::zero(2));
  SelfAdjointnessReport rep = check_self_adjoint(op, Rational(1, 3), q, 3, 9001);
  CHECK(rep.worst <= 1e-4);

  Scenario curved = load_scenario(std::string(DENSOP_SCENARIO_DIR) + "/curved_n2.json");
  DensityOperator cop = main_operator(*curved.tensor, curved.projective());
  SelfAdjointnessReport crep = check_self_adjoint(cop, Rational(1, 3), q, 3, 9001);
  CHECK(crep.worst <= 1e-4);
  CHECK(crep.max_expr_nodes > 0);
}

TEST_CASE("perturbed operators are detected") {
  QuadratureSpec q = box2(101);
  Scenario curved = load_scenario(std::string(DENSOP_SCENARIO_DIR) + "/curved_n2.json");
  DensityOperator op = main_operator(*curved.tensor, curved.projective());
  CHECK(perturbation_probe_defect(op, Rational(1, 3), q) >= 1e-2);

  // the same pinned pair scores quietly for the honest operator
  Scenario flat = load_scenario(std::string(DENSOP_SCENARIO_DIR) + "/flat_n2.json");
  DensityOperator fop = main_operator(*flat.tensor, flat.projective());
  CHECK(perturbation_probe_defect(fop, Rational(1, 3), q) >= 1e-2);
}

TEST_CASE("zero operator has zero defect") {
  QuadratureSpec q = box2(21);
  DensityOperator op;
  op.dim = 2;
  op.lo = 1;
  op.weight = Rational(0);
  op.second.assign(4, Expr::integer(0));
  op.gamma.assign(2, Expr::integer(0));
  op.a.assign(2, Expr::integer(0));
  SelfAdjointnessReport rep = check_self_adjoint(op, Rational(1, 2), q, 2, 5);
  CHECK(rep.worst == 0.0);
}

TEST_CASE("quadrature convergence: doubling the grid gains at least 4x") {
  Scenario curved = load_scenario(std::string(DENSOP_SCENARIO_DIR) + "/curved_n2.json");
  DensityOperator op = main_operator(*curved.tensor, curved.projective());
  // fixed asymmetric pair so the defect is pure quadrature error
  Bump phi = make_bump({Rational(13, 20), Rational(7, 10)}, Rational(7, 20), Rational(1, 3));
  Bump psi = make_bump({Rational(3, 4), Rational(7, 10)}, Rational(7, 20), Rational(1, 6));
  double prev = -1.0;
  for (int pts : {51, 101, 201}) {
    QuadratureSpec q = box2(pts);
    double defect = self_adjoint_defect(op, phi, psi, q);
    if (prev >= 0 && prev > 1e-10) CHECK(defect <= prev / 4.0);
    prev = defect;
  }
}

TEST_CASE("check_generates accepts the canonical operator and flags corruption") {
  TensorDensity2 s = random_tensor(2, Rational(1, 2), 601);
  ProjectiveClass p = random_projective_class(2, 602);
  DensityOperator op = main_operator(s, p);
  DensityBracket br = op.bracket_part();

  CheckResult good = check_generates(op, br, dom2);
  CHECK(good.passed());

  // adding a first-order operator changes nothing
  DensityOperator shifted = op;
  shifted.a[0] = shifted.a[0] + parse_expression("x2^2");
  shifted.b = shifted.b + parse_expression("x1");
  shifted.c = shifted.c + parse_expression("1/3");
  CheckResult still = check_generates(shifted, br, dom2);
  CHECK(still.passed());

  // the zero operator does not generate a nonzero bracket
  DensityOperator zero;
  zero.dim = 2;
  zero.lo = 1;
  zero.weight = br.weight;
  zero.second.assign(4, Expr::integer(0));
  zero.gamma.assign(2, Expr::integer(0));
  zero.a.assign(2, Expr::integer(0));
  CheckResult bad = check_generates(zero, br, dom2);
  CHECK_FALSE(bad.passed());

  // corrupting the second-order part is detected
  DensityOperator corrupt = op;
  corrupt.second[0] = corrupt.second[0] + Expr::integer(1);
  CheckResult bad2 = check_generates(corrupt, br, dom2);
  CHECK_FALSE(bad2.passed());
}

TEST_CASE("check_biderivation accepts canonical and flat brackets") {
  TensorDensity2 s0 = random_tensor(2, Rational(0), 611);
  ProjectiveClass p = random_projective_class(2, 612);
  CHECK(check_biderivation(extend_bracket(s0, p), dom2).passed());

  Density rho1{parse_expression("exp(x1)"), Rational(1)};
  CHECK(check_biderivation(flat_density_bracket(s0, rho1, dom2), dom2).passed());
}

TEST_CASE("report text carries the required fields") {
  Report r;
  r.scenario = "demo";
  r.seed = 7;
  r.samples = 20;
  r.tol = 1e-9;
  r.grid = 101;
  CheckResult c;
  c.name = "trace_free";
  c.worst_defect = 1.5e-12;
  c.tolerance = 1e-9;
  c.seed = 7;
  r.checks.push_back(c);
  std::string text = r.text();
  CHECK(text.find("check=trace_free") != std::string::npos);
  CHECK(text.find("status=PASS") != std::string::npos);
  CHECK(text.find("worst_defect=") != std::string::npos);
  CHECK(text.find("tolerance=") != std::string::npos);
  CHECK(text.find("seed=7") != std::string::npos);
  CHECK(text.find("result=PASS") != std::string::npos);
  CHECK(r.all_pass());

  c.status = CheckResult::Status::Fail;
  r.checks.push_back(c);
  CHECK_FALSE(r.all_pass());
  CHECK(r.text().find("result=FAIL") != std::string::npos);
}

TEST_CASE("invariance battery on the flat scenario") {
  Scenario sc = load_scenario(std::string(DENSOP_SCENARIO_DIR) + "/flat_n2.json");
  Report r = run_invariance_battery(sc);
  for (const auto& c : r.checks) {
    INFO(c.name, " defect=", c.worst_defect, " detail=", c.detail);
    CHECK(c.passed());
  }
  CHECK(r.checks.size() >= 12);
}

TEST_CASE("invariance battery surfaces the expected resonance as a pass") {
  Scenario sc = load_scenario(std::string(DENSOP_SCENARIO_DIR) + "/resonant_n2.json");
  Report r = run_invariance_battery(sc);
  REQUIRE(r.checks.size() == 1);
  CHECK(r.checks[0].name == "expected_error");
  CHECK(r.checks[0].passed());
  CHECK(r.checks[0].detail.find("resonant") != std::string::npos);

  // and a scenario that expects an error which never comes must fail
  Scenario ok = load_scenario(std::string(DENSOP_SCENARIO_DIR) + "/flat_n2.json");
  ok.expect_error = "ResonantWeight";
  Report r2 = run_invariance_battery(ok);
  REQUIRE(r2.checks.size() == 1);
  CHECK_FALSE(r2.checks[0].passed());
}
