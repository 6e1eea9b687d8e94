#ifndef DENSOP_VERIFY_HPP
#define DENSOP_VERIFY_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "densop/operators.hpp"

namespace densop {

struct Scenario;

namespace verify {

// Tensor-product composite Simpson rule over a box. Points per axis must be
// odd and >= 11.
struct QuadratureSpec {
  std::vector<Interval> box;  // box[a] is the range of x(a+1)
  int points_per_axis = 101;

  void validate() const;
};

struct Ball {
  std::vector<double> center;  // indexed by base coordinate (x1..xn)
  double radius = 0.0;
};

// Compactly supported smooth density: amplitude * exp(-1/(1-r^2)) inside the
// ball, zero outside. The coefficient expression is only valid inside; all
// evaluation goes through the mask.
struct Bump {
  Density density;
  Ball support;
};

Bump make_bump(const std::vector<Rational>& center, const Rational& radius,
               const Rational& weight, const Rational& amplitude = Rational(1));

// A bump with rational center/radius drawn inside the box, support strictly
// interior. radius_scale in (0,1] scales the default radius range.
Bump random_bump(const QuadratureSpec& q, const Rational& weight, std::uint64_t seed,
                 double radius_scale = 1.0);

// A pair of strongly overlapping bumps: the second center sits within a few
// percent of a radius of the first, which keeps the product integrand's
// boundary layers resolvable on the default grids.
std::pair<Bump, Bump> random_bump_pair(const QuadratureSpec& q, const Rational& w1,
                                       const Rational& w2, std::uint64_t seed);

// One factor of an integrand: a coefficient expression with an optional
// support mask.
struct Factor {
  Expr coefficient;
  std::optional<Ball> support;

  Factor(Expr e) : coefficient(std::move(e)) {}
  Factor(Expr e, Ball b) : coefficient(std::move(e)), support(std::move(b)) {}
  Factor(const Bump& b) : coefficient(b.density.coefficient), support(b.support) {}
};

// Simpson integral of the product of the factors over the box. Factors with
// a support mask evaluate to zero outside their ball; grid cells where any
// mask vanishes skip expression evaluation entirely.
double integrate(const std::vector<Factor>& factors, const QuadratureSpec& q);

// The canonical pairing: integral of the coefficient product when the
// weights sum to 1 (within 1e-12), exactly 0 otherwise. Masked supports must
// lie inside the box.
double scalar_product(const Density& d1, const Density& d2, const QuadratureSpec& q);
double scalar_product(const Bump& b1, const Bump& b2, const QuadratureSpec& q);
double scalar_product(const Bump& b1, const Density& d2, const QuadratureSpec& q);

// Pairing twisted by a reference density rho of weight sigma: the integral
// of phi psi rho when the weights (including sigma) sum to 1.
double modified_scalar_product(const Density& d1, const Density& d2, const Density& rho,
                               const QuadratureSpec& q);
double modified_scalar_product(const Bump& b1, const Bump& b2, const Density& rho,
                               const QuadratureSpec& q);

struct CheckResult {
  std::string name;
  enum class Status { Pass, Fail, Error } status = Status::Pass;
  double worst_defect = 0.0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::string detail;

  bool passed() const { return status == Status::Pass; }
};

struct SelfAdjointnessReport {
  std::vector<double> defects;  // one per bump pair
  double worst = 0.0;
  std::size_t max_expr_nodes = 0;
};

// Pair <op phi, psi> against <phi, op psi> for `pairs` random bump pairs with
// weights (mu, 1 - mu - w). defect = |I1 - I2| / (1 + |I1|).
SelfAdjointnessReport check_self_adjoint(const DensityOperator& op, const Rational& mu,
                                         const QuadratureSpec& q, int pairs = 5,
                                         std::uint64_t seed = 9001);

// Same against the rho/sigma pairing; psi weight is 1 - mu - w - sigma.
SelfAdjointnessReport check_self_adjoint_modified(const DensityOperator& op, const Rational& mu,
                                                  const Density& rho, const QuadratureSpec& q,
                                                  int pairs = 5, std::uint64_t seed = 9001);

// defect for one explicit bump pair
double self_adjoint_defect(const DensityOperator& op, const Bump& phi, const Bump& psi,
                           const QuadratureSpec& q);

// Detection-power probe: shifts every first-order coefficient a^i by 1/10
// and measures the defect on a pinned, strongly asymmetric bump pair. A
// self-adjoint operator scores small here; the shifted one must not.
double perturbation_probe_defect(const DensityOperator& op, const Rational& mu,
                                 const QuadratureSpec& q);

// Does the operator generate the bracket? Compares generated_bracket(op)
// against the bracket on the generator pairs and on random monomial
// densities.
CheckResult check_generates(const DensityOperator& op, const DensityBracket& br,
                            const SampleDomain& dom);

// Symmetry and the Leibniz property of the bracket induced through the
// generated bracket of its canonical operator, on random monomial densities.
CheckResult check_biderivation(const DensityBracket& br, const SampleDomain& dom);

// Deterministic monomial density: c * x1^p1 ... xn^pn with small rational
// weight. Used by the random checks; exposed for tests.
Density random_monomial_density(int n, std::uint64_t seed);

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  int samples = 0;
  double tol = 0.0;
  int grid = 0;
  std::size_t max_expr_nodes = 0;
  std::vector<CheckResult> checks;

  bool all_pass() const;
  // One parseable line per check: check=<name> status=<...> worst_defect=...
  std::string text() const;
};

// Runs every invariance and equality property the modules assert, against
// the data in the scenario. Scenarios may declare an expected construction
// error; the battery then passes exactly when that error is raised.
Report run_invariance_battery(const Scenario& sc);

} // namespace verify
} // namespace densop

#endif
