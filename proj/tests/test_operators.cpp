#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "densop/operators.hpp"
#include "densop/verify.hpp"
#include "testutil.hpp"

using namespace densop;
using namespace densop::testutil;

namespace {

const SampleDomain dom2 = SampleDomain::box(3);
const SampleDomain ext2 = SampleDomain::box(3);

DensityOperator bare_operator(int n, const Rational& w) {
  DensityOperator op;
  op.dim = n;
  op.lo = 1;
  op.weight = w;
  op.second.assign(n * n, Expr::integer(0));
  op.gamma.assign(n, Expr::integer(0));
  op.a.assign(n, Expr::integer(0));
  return op;
}

// test-side transcription of the fixed-weight restriction: for phi of weight
// mu the operator acts as
//   S^ij d_i d_j phi
//   + [ 2/(n+4) d_j S^ij + (2(w+nw+1)/((n+1)(n+4)) + 2 mu) gamma^i
//       - (n+2)/(n+4) S^jk P^i_jk ] d_i phi
//   + [ 2 mu/(n+4) d_k gamma^k + mu ((2w+2nw-n)/((n+1)(n+4)) + mu) theta
//       - mu (n+1)(n+2)/((n-1)(n+4)) S^ij (d_s P^s_ij - P^p_qi P^q_pj) ] phi
double pencil_oracle(const DensityBracket& br, const ProjectiveClass& p, double mu,
                     const Expr& f, const std::vector<double>& pt) {
  const int n = br.dim;
  const double w = br.weight.to_double();
  auto d = [&](const Expr& e, int v) { return central_fd(e, pt, v, 1e-5); };
  auto dd = [&](const Expr& e, int v1, int v2) {
    double h = 1e-4;
    auto shifted = pt;
    shifted[v1] += h;
    double up = central_fd(e, shifted, v2, h);
    shifted[v1] -= 2 * h;
    double dn = central_fd(e, shifted, v2, h);
    return (up - dn) / (2 * h);
  };

  double total = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) total += br.S(i, j).eval(pt) * dd(f, i, j);

  for (int i = 1; i <= n; ++i) {
    double div = 0.0, cls = 0.0;
    for (int j = 1; j <= n; ++j) {
      div += d(br.S(i, j), j);
      for (int k = 1; k <= n; ++k) cls += br.S(j, k).eval(pt) * p.at(i, j, k).eval(pt);
    }
    double coef = 2.0 / (n + 4) * div +
                  (2 * (w + n * w + 1) / ((n + 1.0) * (n + 4)) + 2 * mu) * br.G(i).eval(pt) -
                  (n + 2.0) / (n + 4) * cls;
    total += coef * d(f, i);
  }

  double divg = 0.0, curv = 0.0;
  for (int i = 1; i <= n; ++i) divg += d(br.G(i), i);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      double q = 0.0;
      for (int s = 1; s <= n; ++s) q += d(p.at(s, i, j), s);
      for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b) q -= p.at(a, b, i).eval(pt) * p.at(b, a, j).eval(pt);
      curv += br.S(i, j).eval(pt) * q;
    }
  double zero_order = 2.0 * mu / (n + 4) * divg +
                      mu * ((2 * w + 2 * n * w - n) / ((n + 1.0) * (n + 4)) + mu) *
                          br.theta.eval(pt) -
                      mu * (n + 1.0) * (n + 2.0) / ((n - 1.0) * (n + 4.0)) * curv;
  total += zero_order * f.eval(pt);
  return total;
}

void check_operators_equal(const DensityOperator& a, const DensityOperator& b,
                           const SampleDomain& d) {
  REQUIRE(a.dim == b.dim);
  CHECK(a.weight == b.weight);
  for (int i = a.lo; i < a.lo + a.dim; ++i) {
    for (int j = a.lo; j < a.lo + a.dim; ++j) CHECK(equal_prob(a.S(i, j), b.S(i, j), d));
    CHECK(equal_prob(a.G(i), b.G(i), d));
    CHECK(equal_prob(a.A(i), b.A(i), d));
  }
  CHECK(equal_prob(a.theta, b.theta, d));
  CHECK(equal_prob(a.b, b.b, d));
  CHECK(equal_prob(a.c, b.c, d));
}

} // namespace

TEST_CASE("apply: harmonic polynomial under the euclidean operator") {
  DensityOperator op = bare_operator(2, Rational(0));
  op.second[0] = Expr::integer(1);
  op.second[3] = Expr::integer(1);
  Density out = apply(op, Density{parse_expression("x1*x2"), Rational(0)});
  CHECK(out.coefficient.is_zero());
  CHECK(out.weight == Rational(0));
}

TEST_CASE("apply: pure theta term sees the squared weight") {
  DensityOperator op = bare_operator(2, Rational(0));
  op.theta = Expr::integer(1);
  Density volume{Expr::integer(1), Rational(1)};
  Density out = apply(op, volume);
  REQUIRE(out.coefficient.is_constant());
  CHECK(out.coefficient.node().value == Rational(1));
  CHECK(out.weight == Rational(1));

  Density half{Expr::integer(1), Rational(1, 2)};
  CHECK(apply(op, half).coefficient.node().value == Rational(1, 4));
}

TEST_CASE("apply matches the fixed-weight pencil oracle") {
  TensorDensity2 s = random_tensor(2, Rational(1, 2), 211);
  ProjectiveClass p = random_projective_class(2, 212);
  DensityOperator op = main_operator(s, p);
  DensityBracket br = op.bracket_part();
  Expr f = parse_expression("x1^2*x2 + x2^2");
  for (const Rational& mu : {Rational(-1), Rational(0), Rational(1, 3), Rational(1), Rational(2)}) {
    Density out = apply(op, Density{f, mu});
    CHECK(out.weight == mu + Rational(1, 2));
    for (const auto& pt : dom2.points()) {
      double got = out.coefficient.eval(pt);
      double want = pencil_oracle(br, p, mu.to_double(), f, pt);
      CHECK(std::abs(got - want) <= 2e-4 * (1.0 + std::abs(want)));
    }
  }
}

TEST_CASE("generated bracket of the zero operator vanishes") {
  DensityOperator op = bare_operator(2, Rational(0));
  Density a{parse_expression("x1^2"), Rational(1, 2)};
  Density b{parse_expression("x2"), Rational(1, 3)};
  CHECK(generated_bracket(op, a, b).coefficient.is_zero());
}

TEST_CASE("second-order-only operator generates S df dg on functions") {
  TensorDensity2 s = random_tensor(2, Rational(0), 221);
  DensityOperator op = bare_operator(2, Rational(0));
  op.second.clear();
  for (int i = 1; i <= 2; ++i)
    for (int j = 1; j <= 2; ++j) op.second.push_back(s.at(i, j));

  RandomExprGen g(2, 222);
  for (int trial = 0; trial < 5; ++trial) {
    Expr f = g.polynomial(), h = g.polynomial();
    Density out =
        generated_bracket(op, Density{f, Rational(0)}, Density{h, Rational(0)});
    std::vector<Expr> expected;
    for (int i = 1; i <= 2; ++i)
      for (int j = 1; j <= 2; ++j) expected.push_back(s.at(i, j) * f.diff(i) * h.diff(j));
    CHECK(equal_prob(out.coefficient, Expr::sum(expected), dom2));
  }
}

TEST_CASE("canonical operator of a constant bracket is bare") {
  TensorDensity2 s = TensorDensity2::kronecker(2);
  DensityBracket br = DensityBracket::from(s, {Expr::integer(0), Expr::integer(0)},
                                           Expr::integer(0));
  DensityOperator op = canonical_operator(br);
  for (int i = 1; i <= 2; ++i) CHECK(op.A(i).is_zero());
  CHECK(op.b.is_zero());
  CHECK(op.c.is_zero());
}

TEST_CASE("canonical operator at weight 1 drops the gamma correction") {
  TensorDensity2 s = random_tensor(2, Rational(1), 231);
  RandomExprGen g(2, 232);
  DensityBracket br = DensityBracket::from(s, {g.polynomial(), g.polynomial()}, g.polynomial());
  DensityOperator op = canonical_operator(br);
  for (int i = 1; i <= 2; ++i) {
    Expr expected = s.at(i, 1).diff(1) + s.at(i, 2).diff(2);
    CHECK(equal_prob(op.A(i), expected, dom2));
  }
  // and b keeps only the gamma divergence
  CHECK(equal_prob(op.b, br.G(1).diff(1) + br.G(2).diff(2), dom2));
}

TEST_CASE("canonical operator generates its bracket on the generator pairs") {
  TensorDensity2 s = random_tensor(2, Rational(1, 2), 241);
  RandomExprGen g(2, 242);
  DensityBracket br = DensityBracket::from(s, {g.polynomial(), g.polynomial()}, g.polynomial());
  DensityOperator op = canonical_operator(br);

  const Density volume{Expr::integer(1), Rational(1)};
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      Density got = generated_bracket(op, Density{Expr::variable(i), Rational(0)},
                                      Density{Expr::variable(j), Rational(0)});
      CHECK(equal_prob(got.coefficient, br.S(i, j), dom2));
      CHECK(got.weight == br.weight);
    }
    Density got = generated_bracket(op, Density{Expr::variable(i), Rational(0)}, volume);
    CHECK(equal_prob(got.coefficient, br.G(i), dom2));
    CHECK(got.weight == br.weight + Rational(1));
  }
  Density got = generated_bracket(op, volume, volume);
  CHECK(equal_prob(got.coefficient, br.theta, dom2));
  CHECK(got.weight == br.weight + Rational(2));
}

TEST_CASE("gamma_theta at weight 0 recovers the upper connection") {
  for (std::uint64_t seed : {251, 252}) {
    TensorDensity2 s = random_tensor(2, Rational(0), seed);
    ProjectiveClass p = random_projective_class(2, seed + 5);
    GammaTheta gt = gamma_theta(s, p);
    auto upper = upper_connection(s, p);
    for (int i = 1; i <= 2; ++i) CHECK(equal_prob(gt.gamma[i - 1], upper[i - 1], dom2));
  }
}

TEST_CASE("gamma_theta of constant data vanishes") {
  TensorDensity2 s = TensorDensity2::kronecker(2, Rational(1, 2));
  GammaTheta gt = gamma_theta(s, ProjectiveClass::zero(2));
  CHECK(gt.gamma[0].is_zero());
  CHECK(gt.gamma[1].is_zero());
  CHECK(gt.theta.is_zero());
  CHECK_FALSE(gt.warning.has_value());
}

TEST_CASE("gamma_theta prefactors at n=2, weight 1") {
  // denominators: 5 - 3 = 2 and 4 - 3 = 1, so prefactors 3/2 and 3
  TensorDensity2::Builder b(2, Rational(1), 1);
  b.set(1, 1, Expr::variable(1));
  TensorDensity2 s = b.build();
  GammaTheta gt = gamma_theta(s, ProjectiveClass::zero(2));
  REQUIRE(gt.gamma[0].is_constant());
  CHECK(gt.gamma[0].node().value == Rational(3, 2));  // (3/2) * d_1 x1
  CHECK(gt.gamma[1].is_zero());
  CHECK(gt.theta.is_zero());  // constant gamma, flat class
}

TEST_CASE("resonant weights raise with the offending value identified") {
  ProjectiveClass p = ProjectiveClass::zero(2);
  // (n+2)/(n+1) = 4/3 kills the theta denominator
  CHECK_THROWS_AS(gamma_theta(TensorDensity2::kronecker(2, Rational(4, 3)), p), ResonantWeight);
  try {
    gamma_theta(TensorDensity2::kronecker(2, Rational(4, 3)), p);
  } catch (const ResonantWeight& e) {
    CHECK(e.which() == 2);
  }
  // (n+3)/(n+1) = 5/3 kills the gamma denominator
  try {
    gamma_theta(TensorDensity2::kronecker(2, Rational(5, 3)), p);
  } catch (const ResonantWeight& e) {
    CHECK(e.which() == 1);
  }
  // n=3 resonances sit elsewhere: 5/4 and 3/2
  CHECK_THROWS_AS(gamma_theta(TensorDensity2::kronecker(3, Rational(5, 4)),
                              ProjectiveClass::zero(3)),
                  ResonantWeight);
  CHECK_NOTHROW(gamma_theta(TensorDensity2::kronecker(3, Rational(4, 3)),
                            ProjectiveClass::zero(3)));
}

TEST_CASE("near-resonant weights carry a warning") {
  ProjectiveClass p = ProjectiveClass::zero(2);
  Rational near = Rational(4, 3) + Rational(1, 10000000);  // within 1e-7
  GammaTheta gt = gamma_theta(TensorDensity2::kronecker(2, near), p);
  REQUIRE(gt.warning.has_value());
  DensityOperator op = main_operator(TensorDensity2::kronecker(2, near), p);
  CHECK(op.resonance_warning.has_value());

  Rational safe(1, 2);
  CHECK_FALSE(gamma_theta(TensorDensity2::kronecker(2, safe), p).warning.has_value());
}

TEST_CASE("main operator of constant flat data is the pure second-order part") {
  TensorDensity2 s = TensorDensity2::kronecker(2, Rational(0));
  DensityOperator op = main_operator(s, ProjectiveClass::zero(2));
  for (int i = 1; i <= 2; ++i) {
    CHECK(op.G(i).is_zero());
    CHECK(op.A(i).is_zero());
  }
  CHECK(op.theta.is_zero());
  CHECK(op.b.is_zero());
  CHECK(op.c.is_zero());
}

TEST_CASE("main operator at weight 0 restricted to functions is the laplacian") {
  TensorDensity2 s = random_tensor(2, Rational(0), 261);
  ProjectiveClass p = random_projective_class(2, 262);
  DensityOperator op = main_operator(s, p);
  OperatorDescriptor lap = projective_laplacian(s, p);
  RandomExprGen g(2, 263);
  for (int t = 0; t < 4; ++t) {
    Expr f = g.polynomial();
    Density out = apply(op, Density{f, Rational(0)});
    CHECK(equal_prob(out.coefficient, lap.apply_to(f), dom2));
    CHECK(out.weight == Rational(0));
  }
}

TEST_CASE("main operator rejects resonant weights") {
  CHECK_THROWS_AS(
      main_operator(TensorDensity2::kronecker(2, Rational(5, 3)), ProjectiveClass::zero(2)),
      ResonantWeight);
}

TEST_CASE("the lift route reproduces the explicit coefficients") {
  // over random brackets (not only canonical ones) and random classes
  for (std::uint64_t seed : {271, 272, 273}) {
    TensorDensity2 s = random_tensor(2, Rational(1, 2), seed);
    RandomExprGen g(2, seed + 5);
    DensityBracket br =
        DensityBracket::from(s, {g.polynomial(), g.polynomial()}, g.polynomial());
    ProjectiveClass p = random_projective_class(2, seed + 9);

    DensityOperator via_lift = tilde_operator_via_lift(br, p, ext2);
    DensityOperator direct = explicit_operator(br, p);
    check_operators_equal(via_lift, direct, dom2);
  }
}

TEST_CASE("lift route: flat class, bare bracket keeps only the divergence term") {
  TensorDensity2 s = random_tensor(2, Rational(0), 281);
  DensityBracket br = DensityBracket::from(s, {Expr::integer(0), Expr::integer(0)},
                                           Expr::integer(0));
  DensityOperator op = tilde_operator_via_lift(br, ProjectiveClass::zero(2), ext2);
  for (int i = 1; i <= 2; ++i) {
    Expr expected =
        Expr::constant(Rational(2, 6)) * (s.at(i, 1).diff(1) + s.at(i, 2).diff(2));
    CHECK(equal_prob(op.A(i), expected, dom2));
    CHECK(op.G(i).is_zero());
  }
  CHECK(equal_prob(op.b, Expr::integer(0), dom2));
  CHECK(op.theta.is_zero());
}

TEST_CASE("lift route of the zero bracket is the zero operator") {
  TensorDensity2 s(2, 1, std::vector<Expr>(4, Expr::integer(0)), Rational(1, 2));
  DensityBracket br = DensityBracket::from(s, {Expr::integer(0), Expr::integer(0)},
                                           Expr::integer(0));
  DensityOperator op = tilde_operator_via_lift(br, random_projective_class(2, 291), ext2);
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) CHECK(op.S(i, j).is_zero());
    CHECK(equal_prob(op.A(i), Expr::integer(0), dom2));
    CHECK(equal_prob(op.G(i), Expr::integer(0), dom2));
  }
  CHECK(equal_prob(op.b, Expr::integer(0), dom2));
}

TEST_CASE("main operator equals canonical of its bracket part") {
  for (std::uint64_t seed : {301, 302, 303}) {
    TensorDensity2 s = random_tensor(2, Rational(1, 3), seed);
    ProjectiveClass p = random_projective_class(2, seed + 7);
    DensityOperator main = main_operator(s, p);
    DensityOperator canon = canonical_operator(main.bracket_part());
    check_operators_equal(main, canon, dom2);
  }
}

TEST_CASE("extend_bracket is trivial for flat constant data") {
  DensityBracket br = extend_bracket(TensorDensity2::kronecker(2), ProjectiveClass::zero(2));
  CHECK(br.G(1).is_zero());
  CHECK(br.G(2).is_zero());
  CHECK(br.theta.is_zero());
  CHECK(br.weight == Rational(0));
}

TEST_CASE("extend_bracket pairs coordinates with the volume via the upper connection") {
  TensorDensity2 s = random_tensor(2, Rational(0), 311);
  ProjectiveClass p = random_projective_class(2, 312);
  DensityBracket br = extend_bracket(s, p);
  auto upper = upper_connection(s, p);
  const Density volume{Expr::integer(1), Rational(1)};
  for (int i = 1; i <= 2; ++i) {
    Density got = bracket_apply(br, Density{Expr::variable(i), Rational(0)}, volume);
    CHECK(equal_prob(got.coefficient, upper[i - 1], dom2));
    CHECK(got.weight == Rational(1));
  }
  CHECK_THROWS_AS(extend_bracket(random_tensor(2, Rational(1, 2), 313), p), ValidationError);
}

TEST_CASE("rho_sigma with trivial reference reduces to the main operator") {
  TensorDensity2 s = random_tensor(2, Rational(1, 2), 321);
  ProjectiveClass p = random_projective_class(2, 322);
  DensityOperator main = main_operator(s, p);
  DensityOperator family =
      rho_sigma_operator(s, p, Density{Expr::integer(1), Rational(0)}, dom2);
  check_operators_equal(main, family, dom2);
  // identical construction path: the printed coefficients agree verbatim
  CHECK(family.b.str() == main.b.str());
  CHECK(family.A(1).str() == main.A(1).str());
}

TEST_CASE("rho_sigma log-derivative correction at n=2") {
  // sigma = 0, rho = e^{x1}: gamma picks up (n+4)/(n+2) S^i1 = (3/2) S^i1
  TensorDensity2 s = TensorDensity2::kronecker(2, Rational(0));
  ProjectiveClass p = ProjectiveClass::zero(2);
  Density rho{parse_expression("exp(x1)"), Rational(0)};
  DensityOperator op = rho_sigma_operator(s, p, rho, dom2);
  // gamma^i = (3/5)(0 + 0 + (3/2) delta^{i1}) = (9/10, 0)
  CHECK(equal_prob(op.G(1), parse_expression("9/10"), dom2));
  CHECK(equal_prob(op.G(2), parse_expression("0"), dom2));
}

TEST_CASE("rho_sigma shifted resonances") {
  TensorDensity2 s = TensorDensity2::kronecker(2, Rational(1, 3));
  ProjectiveClass p = ProjectiveClass::zero(2);
  // w_eff = 1/3 + (3/2) sigma = 5/3 at sigma = 8/9
  Density rho{Expr::integer(1), Rational(8, 9)};
  CHECK_THROWS_AS(rho_sigma_operator(s, p, rho, dom2), ShiftedResonance);
  // w_eff = 4/3 at sigma = 2/3
  Density rho2{Expr::integer(1), Rational(2, 3)};
  CHECK_THROWS_AS(rho_sigma_operator(s, p, rho2, dom2), ShiftedResonance);
  // nonpositive reference density
  Density bad{parse_expression("x1 - 1"), Rational(0)};
  CHECK_THROWS_AS(rho_sigma_operator(s, p, bad, dom2), NonpositiveDensity);
}

TEST_CASE("flat density bracket") {
  TensorDensity2 s = TensorDensity2::kronecker(2);

  // constant reference: trivial bracket
  DensityBracket trivial =
      flat_density_bracket(s, Density{Expr::integer(2), Rational(1)}, dom2);
  CHECK(trivial.G(1).is_zero());
  CHECK(trivial.G(2).is_zero());
  CHECK(trivial.theta.is_zero());

  // rho = e^{x1}: gamma = (-1, 0), theta = 1
  DensityBracket br =
      flat_density_bracket(s, Density{parse_expression("exp(x1)"), Rational(1)}, dom2);
  CHECK(equal_prob(br.G(1), parse_expression("0-1"), dom2));
  CHECK(equal_prob(br.G(2), parse_expression("0"), dom2));
  CHECK(equal_prob(br.theta, parse_expression("1"), dom2));

  // distinct from the canonical extension of the same S and flat class
  DensityBracket canonical = extend_bracket(s, ProjectiveClass::zero(2));
  const std::vector<double> pt{0.5, 0.7, 0.9};
  CHECK(std::abs(br.G(1).eval(pt) - canonical.G(1).eval(pt)) > 0.5);

  CHECK_THROWS_AS(
      flat_density_bracket(s, Density{parse_expression("exp(x1)"), Rational(1, 2)}, dom2),
      ValidationError);
  CHECK_THROWS_AS(
      flat_density_bracket(s, Density{parse_expression("x1 - 1"), Rational(1)}, dom2),
      NonpositiveDensity);
}

TEST_CASE("constant freeness of the constructed operators") {
  const Density unit{Expr::integer(1), Rational(0)};
  TensorDensity2 s = random_tensor(2, Rational(1, 2), 341);
  ProjectiveClass p = random_projective_class(2, 342);

  CHECK(apply(main_operator(s, p), unit).coefficient.is_zero());
  CHECK(apply(canonical_operator(main_operator(s, p).bracket_part()), unit)
            .coefficient.is_zero());
  CHECK(apply(rho_sigma_operator(s, p, Density{parse_expression("exp(x1/2)"), Rational(1, 5)},
                                 dom2),
              unit)
            .coefficient.is_zero());
}

TEST_CASE("generated brackets are symmetric and add weights") {
  TensorDensity2 s = random_tensor(2, Rational(1, 3), 351);
  ProjectiveClass p = random_projective_class(2, 352);
  DensityOperator op = main_operator(s, p);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Density a = verify::random_monomial_density(2, 360 + 2 * seed);
    Density b = verify::random_monomial_density(2, 361 + 2 * seed);
    Density ab = generated_bracket(op, a, b);
    Density ba = generated_bracket(op, b, a);
    CHECK(equal_prob(ab.coefficient, ba.coefficient, dom2));
    CHECK(ab.weight == a.weight + b.weight + op.weight);
  }
}

TEST_CASE("coordinate invariance of the canonical extension") {
  SampleDomain d = SampleDomain::box(3);
  for (std::uint64_t seed : {371, 372}) {
    ChartTransition t = random_transition2(seed, d);
    Connection rep = random_connection(2, seed + 11);
    ProjectiveClass p = projective_class(rep);
    TensorDensity2 s = random_tensor(2, Rational(1, 2), seed + 22);
    DensityOperator op = main_operator(s, p);

    TensorDensity2 s_new = transform_tensor_density(s, t);
    ProjectiveClass p_new = projective_class(transform_connection(rep, t));
    DensityOperator op_new = main_operator(s_new, p_new);

    Density dens{parse_expression("x1^2 + x2"), Rational(1, 3)};
    Density lhs = apply(op_new, transform_density(dens, t));
    Density rhs = transform_density(apply(op, dens), t);
    CHECK(lhs.weight == rhs.weight);
    for (const auto& pt : d.points()) {
      std::vector<double> q = t.push(pt);
      double a = lhs.coefficient.eval(q);
      double b = rhs.coefficient.eval(q);
      CHECK(std::abs(a - b) <= 1e-6 * (1.0 + std::max(std::abs(a), std::abs(b))));
    }
  }
}

TEST_CASE("dimension guards") {
  CHECK_THROWS_AS(main_operator(TensorDensity2::kronecker(3), ProjectiveClass::zero(2)),
                  DimensionError);
  DensityOperator op = bare_operator(2, Rational(0));
  CHECK_THROWS_AS(apply(op, Density{parse_expression("x3"), Rational(0)}), DimensionError);
}
