#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "densop/expr.hpp"
#include "testutil.hpp"

using namespace densop;
using testutil::RandomExprGen;

TEST_CASE("parse and evaluate basics") {
  CHECK(parse_expression("x1^2 + x2^2").eval({0.0, 1.0, 2.0}) == doctest::Approx(5.0));
  CHECK(parse_expression("log(x1)").eval({0.0, 1.0}) == doctest::Approx(0.0));
  // oracle: plain C++ arithmetic for the same formula
  double expected = std::exp(2 * 0.5);
  CHECK(parse_expression("exp(2*x0)").eval({0.5}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(2.718281828459045));
}

TEST_CASE("parse rational and decimal literals") {
  Expr half = parse_expression("1/2");
  REQUIRE(half.is_constant());
  CHECK(half.node().value == Rational(1, 2));

  Expr dec = parse_expression("0.25");
  REQUIRE(dec.is_constant());
  CHECK(dec.node().value == Rational(1, 4));

  Expr folded = parse_expression("1/2 + 1/3");
  REQUIRE(folded.is_constant());
  CHECK(folded.node().value == Rational(5, 6));

  CHECK(parse_expression("2/4").node().value == Rational(1, 2));
}

TEST_CASE("parse precedence and associativity") {
  CHECK(parse_expression("1 + 2*3").eval({}) == doctest::Approx(7.0));
  CHECK(parse_expression("2*3^2").eval({}) == doctest::Approx(18.0));
  CHECK(parse_expression("-x1^2").eval({0.0, 3.0}) == doctest::Approx(-9.0));
  CHECK(parse_expression("(0-2)^2").eval({}) == doctest::Approx(4.0));
  CHECK(parse_expression("x1^2^3").eval({0.0, 2.0}) == doctest::Approx(256.0));
  CHECK(parse_expression("x1^(-1)").eval({0.0, 4.0}) == doctest::Approx(0.25));
  CHECK(parse_expression("  x1 \t+\n 1 ").eval({0.0, 1.0}) == doctest::Approx(2.0));
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse_expression("x1 + "), ParseError);
  CHECK_THROWS_AS(parse_expression("foo(x1)"), ParseError);
  CHECK_THROWS_AS(parse_expression("x1 + bar"), ParseError);
  CHECK_THROWS_AS(parse_expression("(x1"), ParseError);
  CHECK_THROWS_AS(parse_expression("x1^x2"), ParseError);
  try {
    parse_expression("x1 + quux");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
}

TEST_CASE("evaluation domain errors are reported") {
  CHECK_THROWS_AS(parse_expression("1/x1").eval({0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(parse_expression("log(x1)").eval({0.0, -1.0}), DomainError);
  CHECK_THROWS_AS(parse_expression("log(x1 - 1)").eval({0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(parse_expression("x1^(-2)").eval({0.0, 0.0}), DomainError);
}

TEST_CASE("diff basics") {
  Expr cube = parse_expression("x1^3");
  CHECK(cube.diff(1).eval({0.0, 2.0}) == doctest::Approx(12.0));

  Expr c = parse_expression("7/3");
  CHECK(c.diff(1).is_zero());

  // d/dx0 exp(l x0) = l exp(l x0), checked against a central difference
  Rational l(3, 4);
  Expr e = Expr::exp(Expr::constant(l) * Expr::variable(0));
  Expr de = e.diff(0);
  for (double t : {0.3, 0.7, 1.1}) {
    double analytic = l.to_double() * std::exp(l.to_double() * t);
    CHECK(de.eval({t}) == doctest::Approx(analytic).epsilon(1e-12));
    double fd = testutil::central_fd(e, {t}, 0);
    CHECK(std::abs(de.eval({t}) - fd) <= 1e-8 * (1.0 + std::abs(fd)));
  }
}

TEST_CASE("equal_prob") {
  SampleDomain d = SampleDomain::box(2);
  CHECK(equal_prob(parse_expression("(x1+1)^2"), parse_expression("x1^2 + 2*x1 + 1"), d));

  SampleDomain unit = SampleDomain::box(2, 0.0, 1.0);
  CHECK_FALSE(equal_prob(parse_expression("x1"), parse_expression("x1 + 1/1000"), unit));

  SampleDomain wide = SampleDomain::box(2, 0.5, 2.0);
  CHECK(equal_prob(parse_expression("log(x1)").diff(1), parse_expression("1/x1"), wide));
}

TEST_CASE("equal_prob propagates domain errors") {
  SampleDomain d = SampleDomain::box(2, -1.0, 1.0);
  Expr e = parse_expression("log(x1)");
  CHECK_THROWS_AS(equal_prob(e, e, d), DomainError);
}

TEST_CASE("light simplification") {
  Expr x = Expr::variable(1);
  CHECK((Expr::integer(0) * x).is_zero());
  CHECK(structurally_equal(x + Expr::integer(0), x));
  CHECK(structurally_equal(Expr::integer(1) * x, x));
  CHECK(Expr::power(x, 0).is_one());
  CHECK(Expr::exp(Expr::integer(0)).is_one());
  CHECK(Expr::log(Expr::integer(1)).is_zero());
  CHECK(Expr::sin(Expr::integer(0)).is_zero());
  CHECK(Expr::cos(Expr::integer(0)).is_one());
  CHECK(Expr::constant(Rational(2, 4)).node().value == Rational(1, 2));
  // 0 * (1/x1) folds away the singularity by design
  CHECK((Expr::integer(0) * Expr::quotient(Expr::integer(1), x)).is_zero());
}

TEST_CASE("differentiation linearity, Leibniz, Clairaut") {
  SampleDomain d = SampleDomain::box(3);
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    RandomExprGen g(2, seed);
    Expr e1 = g.gen(), e2 = g.gen();
    Rational a = g.small(), b = g.small();
    for (int v : {1, 2}) {
      Expr lin_lhs = (Expr::constant(a) * e1 + Expr::constant(b) * e2).diff(v);
      Expr lin_rhs = Expr::constant(a) * e1.diff(v) + Expr::constant(b) * e2.diff(v);
      CHECK(equal_prob(lin_lhs, lin_rhs, d));

      Expr leib_lhs = (e1 * e2).diff(v);
      Expr leib_rhs = e1.diff(v) * e2 + e1 * e2.diff(v);
      CHECK(equal_prob(leib_lhs, leib_rhs, d));
    }
    CHECK(equal_prob(e1.diff(1).diff(2), e1.diff(2).diff(1), d));
  }
}

TEST_CASE("diff agrees with central finite differences") {
  SampleDomain d = SampleDomain::box(3, 0.2, 1.2, 20, 1e-9, 77);
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    RandomExprGen g(2, seed);
    Expr e = g.gen();
    for (int v : {1, 2}) {
      Expr de = e.diff(v);
      for (const auto& p : d.points()) {
        double sym = de.eval(p);
        double fd = testutil::central_fd(e, p, v);
        CHECK(std::abs(sym - fd) <= 1e-6 * (1.0 + std::max(std::abs(sym), std::abs(fd))));
      }
    }
  }
}

TEST_CASE("printer output re-parses to the same function") {
  SampleDomain d = SampleDomain::box(4);
  for (std::uint64_t seed = 50; seed < 65; ++seed) {
    RandomExprGen g(3, seed);
    Expr e = g.gen();
    Expr round = parse_expression(e.str());
    CHECK(equal_prob(e, round, d));
  }
  // negative coefficients render with a minus and still re-parse
  Expr e = parse_expression("x1 - 2*x2 - 1/2");
  CHECK(equal_prob(parse_expression(e.str()), e, d));
}

TEST_CASE("substitute and compose") {
  SampleDomain d = SampleDomain::box(3);
  Expr e = parse_expression("x0^2 + x1*x0 + x2");
  Expr at_zero = e.substitute(0, Expr::integer(0));
  CHECK(structurally_equal(at_zero, Expr::variable(2)));  // folds down to x2
  CHECK(equal_prob(at_zero, parse_expression("x2"), d));

  std::vector<Expr> repl{parse_expression("x1 + x2"), parse_expression("x1*x2")};
  Expr composed = parse_expression("x1^2 + x2").compose(repl, 1);
  CHECK(equal_prob(composed, parse_expression("(x1+x2)^2 + x1*x2"), d));
}

TEST_CASE("size and max_variable") {
  Expr e = parse_expression("x1*x2 + exp(x3)");
  CHECK(e.max_variable() == 3);
  CHECK(e.size() >= 6);
  CHECK(Expr::integer(4).max_variable() == -1);
}

TEST_CASE("deterministic sampling") {
  SampleDomain d = SampleDomain::box(2, 0.2, 1.2, 5, 1e-9, 42);
  auto p1 = d.points();
  auto p2 = d.points();
  CHECK(p1 == p2);
  for (const auto& p : p1)
    for (double v : p) {
      CHECK(v >= 0.2);
      CHECK(v < 1.2);
    }
}

TEST_CASE("rational arithmetic") {
  CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, -2) == Rational(-1, 2));
  CHECK(Rational(3, 4).pow(2) == Rational(9, 16));
  CHECK(Rational(2).pow(-2) == Rational(1, 4));
  CHECK(Rational(7, 3).str() == "7/3");
  CHECK_THROWS(Rational(1, 0));
  CHECK((Rational(1, 3) < Rational(1, 2)));
}
