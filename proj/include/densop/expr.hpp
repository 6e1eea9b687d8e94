#ifndef DENSOP_EXPR_HPP
#define DENSOP_EXPR_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "densop/errors.hpp"
#include "densop/rational.hpp"

namespace densop {

enum class NodeKind : std::uint8_t {
  Constant,  // exact rational
  Variable,  // x0, x1, ... (x0 is the fibre coordinate)
  Sum,       // n-ary
  Product,   // n-ary
  Quotient,  // kids[0] / kids[1]
  Power,     // kids[0] ^ exponent (integer)
  Exp,
  Log,
  Sin,
  Cos,
};

class Expr;

struct ExprNode {
  NodeKind kind;
  Rational value;          // Constant
  int var = -1;            // Variable
  long long exponent = 0;  // Power
  std::vector<Expr> kids;
  std::uint64_t id = 0;  // globally unique, used for memoized traversals
};

// Immutable scalar expression over variables x0..xN. Construction applies
// light simplification only: 0*e -> 0, e+0 -> e, 1*e -> e, rational constant
// folding (including exp(0), log(1), sin(0), cos(0)). Values are shared
// subtrees; all operations are pure and safe to call concurrently.
class Expr {
public:
  Expr();  // the zero expression

  static Expr constant(const Rational& r);
  static Expr integer(long long n) { return constant(Rational(n)); }
  static Expr variable(int index);

  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);
  static Expr quotient(Expr num, Expr den);
  static Expr power(Expr base, long long exponent);
  static Expr exp(Expr e);
  static Expr log(Expr e);
  static Expr sin(Expr e);
  static Expr cos(Expr e);

  // base^r for rational r: an integer Power when r is integral, otherwise
  // exp(r*log(base)) (valid where base > 0).
  static Expr pow_rational(Expr base, const Rational& r);

  friend Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
  friend Expr operator-(const Expr& a, const Expr& b) {
    return sum({a, product({integer(-1), b})});
  }
  friend Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }
  friend Expr operator/(const Expr& a, const Expr& b) { return quotient(a, b); }
  Expr operator-() const { return product({integer(-1), *this}); }

  // Exact partial derivative with respect to x<var>.
  Expr diff(int var) const;

  // Double-precision value at `point`, where point[i] is the value of xi.
  // Throws DomainError on division by zero or log of a nonpositive value.
  double eval(std::span<const double> point) const;
  double eval(std::initializer_list<double> point) const {
    return eval(std::span<const double>(point.begin(), point.size()));
  }

  // Replace x<var> by `replacement` everywhere.
  Expr substitute(int var, const Expr& replacement) const;
  // Replace x<first_var + a> by replacement[a] for each a; variables below
  // first_var are left untouched.
  Expr compose(std::span<const Expr> replacements, int first_var) const;

  std::size_t size() const;   // number of distinct DAG nodes
  int max_variable() const;   // largest variable index used, -1 if none

  bool is_constant() const { return n_->kind == NodeKind::Constant; }
  bool is_zero() const { return is_constant() && n_->value.is_zero(); }
  bool is_one() const { return is_constant() && n_->value.is_one(); }

  // Structural identity (same tree up to shared-node equality).
  friend bool structurally_equal(const Expr& a, const Expr& b);

  std::string str() const;    // re-parseable grammar text
  std::string latex() const;

  const ExprNode& node() const { return *n_; }

private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : n_(std::move(n)) {}
  static Expr make(ExprNode&& node);

  std::shared_ptr<const ExprNode> n_;
};

struct Interval {
  double lo = 0.2;
  double hi = 1.2;
};

// Sampling box for probabilistic identity checks. intervals[i] is the range
// of xi; expressions may use any subset of the covered variables.
struct SampleDomain {
  std::vector<Interval> intervals;
  int samples = 20;
  double tol = 1e-9;
  std::uint64_t seed = 9001;

  static SampleDomain box(int nvars, double lo = 0.2, double hi = 1.2, int samples = 20,
                          double tol = 1e-9, std::uint64_t seed = 9001);

  // The deterministic sample points for this domain (portable across
  // standard libraries: derived from raw mt19937_64 output).
  std::vector<std::vector<double>> points() const;
};

// True iff |e1 - e2| <= tol * (1 + max(|e1|, |e2|)) at every sample point.
// Domain errors at a sample point propagate to the caller.
bool equal_prob(const Expr& e1, const Expr& e2, const SampleDomain& d);

// Largest defect |e1 - e2| / (1 + max(|e1|, |e2|)) over the sample points.
double max_defect(const Expr& e1, const Expr& e2, const SampleDomain& d);

// Grammar: variables x0..xN; rational literals `p`, `p/q` (via constant
// folding) and decimals; + - * / ^ with usual precedence, ^ right-associative
// with integer exponent; exp( ) log( ) sin( ) cos( ); parentheses.
Expr parse_expression(std::string_view text);

} // namespace densop

#endif
