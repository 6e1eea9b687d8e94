#include "densop/expr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <unordered_map>

namespace densop {

namespace {

std::atomic<std::uint64_t> next_node_id{1};

bool is_const(const Expr& e, const Rational& r) {
  return e.node().kind == NodeKind::Constant && e.node().value == r;
}

} // namespace

Expr Expr::make(ExprNode&& node) {
  node.id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  return Expr(std::make_shared<const ExprNode>(std::move(node)));
}

Expr::Expr() { *this = constant(Rational(0)); }

Expr Expr::constant(const Rational& r) {
  ExprNode n;
  n.kind = NodeKind::Constant;
  n.value = r;
  return make(std::move(n));
}

Expr Expr::variable(int index) {
  if (index < 0) throw ValidationError("variable index must be nonnegative");
  ExprNode n;
  n.kind = NodeKind::Variable;
  n.var = index;
  return make(std::move(n));
}

Expr Expr::sum(std::vector<Expr> terms) {
  std::vector<Expr> kids;
  Rational c(0);
  for (auto& t : terms) {
    if (t.node().kind == NodeKind::Sum) {
      for (const auto& k : t.node().kids) {
        if (k.is_constant())
          c += k.node().value;
        else
          kids.push_back(k);
      }
    } else if (t.is_constant()) {
      c += t.node().value;
    } else {
      kids.push_back(std::move(t));
    }
  }
  if (!c.is_zero()) kids.push_back(constant(c));
  if (kids.empty()) return constant(Rational(0));
  if (kids.size() == 1) return kids.front();
  ExprNode n;
  n.kind = NodeKind::Sum;
  n.kids = std::move(kids);
  return make(std::move(n));
}

Expr Expr::product(std::vector<Expr> factors) {
  std::vector<Expr> kids;
  Rational c(1);
  for (auto& f : factors) {
    if (f.node().kind == NodeKind::Product) {
      for (const auto& k : f.node().kids) {
        if (k.is_constant())
          c *= k.node().value;
        else
          kids.push_back(k);
      }
    } else if (f.is_constant()) {
      c *= f.node().value;
    } else {
      kids.push_back(std::move(f));
    }
  }
  if (c.is_zero()) return constant(Rational(0));
  if (!c.is_one()) kids.insert(kids.begin(), constant(c));
  if (kids.empty()) return constant(Rational(1));
  if (kids.size() == 1) return kids.front();
  ExprNode n;
  n.kind = NodeKind::Product;
  n.kids = std::move(kids);
  return make(std::move(n));
}

Expr Expr::quotient(Expr num, Expr den) {
  if (den.is_one()) return num;
  if (num.is_zero()) return constant(Rational(0));
  if (den.is_constant()) {
    if (den.node().value.is_zero()) throw DomainError("division by constant zero");
    if (num.is_constant()) return constant(num.node().value / den.node().value);
    // fold 1/c into the product as a rational coefficient
    return product({constant(Rational(1) / den.node().value), std::move(num)});
  }
  ExprNode n;
  n.kind = NodeKind::Quotient;
  n.kids = {std::move(num), std::move(den)};
  return make(std::move(n));
}

Expr Expr::power(Expr base, long long exponent) {
  if (exponent == 0) return constant(Rational(1));
  if (exponent == 1) return base;
  if (base.is_constant()) return constant(base.node().value.pow(exponent));
  if (base.node().kind == NodeKind::Power) {
    long long inner = base.node().exponent;
    return power(base.node().kids[0], inner * exponent);
  }
  ExprNode n;
  n.kind = NodeKind::Power;
  n.exponent = exponent;
  n.kids = {std::move(base)};
  return make(std::move(n));
}

Expr Expr::exp(Expr e) {
  if (e.is_zero()) return constant(Rational(1));
  ExprNode n;
  n.kind = NodeKind::Exp;
  n.kids = {std::move(e)};
  return make(std::move(n));
}

Expr Expr::log(Expr e) {
  if (e.is_constant()) {
    const Rational& v = e.node().value;
    if (v.is_one()) return constant(Rational(0));
    if (v.num() <= 0) throw DomainError("log of a nonpositive constant");
  }
  ExprNode n;
  n.kind = NodeKind::Log;
  n.kids = {std::move(e)};
  return make(std::move(n));
}

Expr Expr::sin(Expr e) {
  if (e.is_zero()) return constant(Rational(0));
  ExprNode n;
  n.kind = NodeKind::Sin;
  n.kids = {std::move(e)};
  return make(std::move(n));
}

Expr Expr::cos(Expr e) {
  if (e.is_zero()) return constant(Rational(1));
  ExprNode n;
  n.kind = NodeKind::Cos;
  n.kids = {std::move(e)};
  return make(std::move(n));
}

Expr Expr::pow_rational(Expr base, const Rational& r) {
  if (r.is_integer()) return power(std::move(base), r.num());
  return exp(product({constant(r), log(std::move(base))}));
}

// ---------------------------------------------------------------------------
// differentiation

namespace {

Expr diff_impl(const Expr& e, int var, std::unordered_map<const ExprNode*, Expr>& memo) {
  const ExprNode& n = e.node();
  auto it = memo.find(&n);
  if (it != memo.end()) return it->second;

  Expr result;
  switch (n.kind) {
    case NodeKind::Constant:
      result = Expr::integer(0);
      break;
    case NodeKind::Variable:
      result = Expr::integer(n.var == var ? 1 : 0);
      break;
    case NodeKind::Sum: {
      std::vector<Expr> terms;
      terms.reserve(n.kids.size());
      for (const auto& k : n.kids) terms.push_back(diff_impl(k, var, memo));
      result = Expr::sum(std::move(terms));
      break;
    }
    case NodeKind::Product: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        Expr di = diff_impl(n.kids[i], var, memo);
        if (di.is_zero()) continue;
        std::vector<Expr> factors;
        factors.reserve(n.kids.size());
        for (std::size_t j = 0; j < n.kids.size(); ++j)
          factors.push_back(j == i ? di : n.kids[j]);
        terms.push_back(Expr::product(std::move(factors)));
      }
      result = Expr::sum(std::move(terms));
      break;
    }
    case NodeKind::Quotient: {
      const Expr& u = n.kids[0];
      const Expr& v = n.kids[1];
      Expr du = diff_impl(u, var, memo);
      Expr dv = diff_impl(v, var, memo);
      result = Expr::quotient(du * v - u * dv, Expr::power(v, 2));
      break;
    }
    case NodeKind::Power: {
      const Expr& u = n.kids[0];
      Expr du = diff_impl(u, var, memo);
      result = Expr::product(
          {Expr::integer(n.exponent), Expr::power(u, n.exponent - 1), std::move(du)});
      break;
    }
    case NodeKind::Exp:
      result = e * diff_impl(n.kids[0], var, memo);
      break;
    case NodeKind::Log:
      result = Expr::quotient(diff_impl(n.kids[0], var, memo), n.kids[0]);
      break;
    case NodeKind::Sin:
      result = Expr::cos(n.kids[0]) * diff_impl(n.kids[0], var, memo);
      break;
    case NodeKind::Cos:
      result = Expr::product(
          {Expr::integer(-1), Expr::sin(n.kids[0]), diff_impl(n.kids[0], var, memo)});
      break;
  }
  memo.emplace(&n, result);
  return result;
}

} // namespace

Expr Expr::diff(int var) const {
  if (var < 0) throw ValidationError("variable index must be nonnegative");
  std::unordered_map<const ExprNode*, Expr> memo;
  return diff_impl(*this, var, memo);
}

// ---------------------------------------------------------------------------
// evaluation (epoch-stamped per-thread cache keyed by node id)

namespace {

struct EvalCache {
  std::vector<double> value;
  std::vector<std::uint64_t> stamp;
  std::uint64_t epoch = 0;
};

thread_local EvalCache eval_cache;

double eval_impl(const ExprNode& n, std::span<const double> p, EvalCache& c) {
  if (n.id < c.stamp.size() && c.stamp[n.id] == c.epoch) return c.value[n.id];

  double r = 0.0;
  switch (n.kind) {
    case NodeKind::Constant:
      r = n.value.to_double();
      break;
    case NodeKind::Variable:
      if (static_cast<std::size_t>(n.var) >= p.size())
        throw DomainError("point does not cover variable x" + std::to_string(n.var));
      r = p[n.var];
      break;
    case NodeKind::Sum:
      for (const auto& k : n.kids) r += eval_impl(k.node(), p, c);
      break;
    case NodeKind::Product:
      r = 1.0;
      for (const auto& k : n.kids) r *= eval_impl(k.node(), p, c);
      break;
    case NodeKind::Quotient: {
      double den = eval_impl(n.kids[1].node(), p, c);
      if (den == 0.0) throw DomainError("division by zero");
      r = eval_impl(n.kids[0].node(), p, c) / den;
      break;
    }
    case NodeKind::Power: {
      double b = eval_impl(n.kids[0].node(), p, c);
      long long e = n.exponent;
      if (e < 0) {
        if (b == 0.0) throw DomainError("zero base with negative exponent");
        b = 1.0 / b;
        e = -e;
      }
      r = 1.0;
      while (e > 0) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
      }
      break;
    }
    case NodeKind::Exp:
      r = std::exp(eval_impl(n.kids[0].node(), p, c));
      break;
    case NodeKind::Log: {
      double a = eval_impl(n.kids[0].node(), p, c);
      if (a <= 0.0) throw DomainError("log of a nonpositive value");
      r = std::log(a);
      break;
    }
    case NodeKind::Sin:
      r = std::sin(eval_impl(n.kids[0].node(), p, c));
      break;
    case NodeKind::Cos:
      r = std::cos(eval_impl(n.kids[0].node(), p, c));
      break;
  }
  if (n.id >= c.stamp.size()) {
    c.stamp.resize(n.id + 1, 0);
    c.value.resize(n.id + 1, 0.0);
  }
  c.stamp[n.id] = c.epoch;
  c.value[n.id] = r;
  return r;
}

} // namespace

double Expr::eval(std::span<const double> point) const {
  EvalCache& c = eval_cache;
  ++c.epoch;
  return eval_impl(*n_, point, c);
}

// ---------------------------------------------------------------------------
// substitution

namespace {

Expr rebuild(const Expr& e, std::unordered_map<const ExprNode*, Expr>& memo,
             const std::function<Expr(int)>& var_map);

Expr rebuild_node(const ExprNode& n, std::unordered_map<const ExprNode*, Expr>& memo,
                  const std::function<Expr(int)>& var_map) {
  switch (n.kind) {
    case NodeKind::Constant:
      return Expr::constant(n.value);
    case NodeKind::Variable:
      return var_map(n.var);
    case NodeKind::Sum: {
      std::vector<Expr> kids;
      kids.reserve(n.kids.size());
      for (const auto& k : n.kids) kids.push_back(rebuild(k, memo, var_map));
      return Expr::sum(std::move(kids));
    }
    case NodeKind::Product: {
      std::vector<Expr> kids;
      kids.reserve(n.kids.size());
      for (const auto& k : n.kids) kids.push_back(rebuild(k, memo, var_map));
      return Expr::product(std::move(kids));
    }
    case NodeKind::Quotient:
      return Expr::quotient(rebuild(n.kids[0], memo, var_map), rebuild(n.kids[1], memo, var_map));
    case NodeKind::Power:
      return Expr::power(rebuild(n.kids[0], memo, var_map), n.exponent);
    case NodeKind::Exp:
      return Expr::exp(rebuild(n.kids[0], memo, var_map));
    case NodeKind::Log:
      return Expr::log(rebuild(n.kids[0], memo, var_map));
    case NodeKind::Sin:
      return Expr::sin(rebuild(n.kids[0], memo, var_map));
    case NodeKind::Cos:
      return Expr::cos(rebuild(n.kids[0], memo, var_map));
  }
  throw std::logic_error("unreachable");
}

Expr rebuild(const Expr& e, std::unordered_map<const ExprNode*, Expr>& memo,
             const std::function<Expr(int)>& var_map) {
  auto it = memo.find(&e.node());
  if (it != memo.end()) return it->second;
  Expr r = rebuild_node(e.node(), memo, var_map);
  memo.emplace(&e.node(), r);
  return r;
}

} // namespace

Expr Expr::substitute(int var, const Expr& replacement) const {
  std::unordered_map<const ExprNode*, Expr> memo;
  return rebuild(*this, memo,
                 [&](int v) { return v == var ? replacement : Expr::variable(v); });
}

Expr Expr::compose(std::span<const Expr> replacements, int first_var) const {
  std::unordered_map<const ExprNode*, Expr> memo;
  return rebuild(*this, memo, [&](int v) -> Expr {
    if (v >= first_var && static_cast<std::size_t>(v - first_var) < replacements.size())
      return replacements[v - first_var];
    return Expr::variable(v);
  });
}

// ---------------------------------------------------------------------------
// structure queries

namespace {

void collect_nodes(const ExprNode& n, std::unordered_map<const ExprNode*, bool>& seen) {
  if (seen.count(&n)) return;
  seen.emplace(&n, true);
  for (const auto& k : n.kids) collect_nodes(k.node(), seen);
}

} // namespace

std::size_t Expr::size() const {
  std::unordered_map<const ExprNode*, bool> seen;
  collect_nodes(*n_, seen);
  return seen.size();
}

int Expr::max_variable() const {
  std::unordered_map<const ExprNode*, bool> seen;
  collect_nodes(*n_, seen);
  int m = -1;
  for (const auto& [n, _] : seen)
    if (n->kind == NodeKind::Variable) m = std::max(m, n->var);
  return m;
}

namespace {

bool eq_impl(const ExprNode& a, const ExprNode& b,
             std::unordered_map<const ExprNode*, const ExprNode*>& memo) {
  if (&a == &b) return true;
  if (a.kind != b.kind || a.kids.size() != b.kids.size()) return false;
  auto it = memo.find(&a);
  if (it != memo.end() && it->second == &b) return true;
  switch (a.kind) {
    case NodeKind::Constant:
      if (a.value != b.value) return false;
      break;
    case NodeKind::Variable:
      if (a.var != b.var) return false;
      break;
    case NodeKind::Power:
      if (a.exponent != b.exponent) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.kids.size(); ++i)
    if (!eq_impl(a.kids[i].node(), b.kids[i].node(), memo)) return false;
  memo[&a] = &b;
  return true;
}

} // namespace

bool structurally_equal(const Expr& a, const Expr& b) {
  std::unordered_map<const ExprNode*, const ExprNode*> memo;
  return eq_impl(a.node(), b.node(), memo);
}

// ---------------------------------------------------------------------------
// printing

namespace {

// precedence levels: 0 sum, 1 product, 2 quotient-right/unary, 3 power/atom
void print_plain(const ExprNode& n, std::ostream& os, int parent_prec);

void print_child(const Expr& e, std::ostream& os, int prec) { print_plain(e.node(), os, prec); }

bool is_negative_constant(const ExprNode& n) {
  return n.kind == NodeKind::Constant && n.value.num() < 0;
}

void print_plain(const ExprNode& n, std::ostream& os, int parent_prec) {
  int prec;
  switch (n.kind) {
    case NodeKind::Constant: prec = n.value.num() < 0 || !n.value.is_integer() ? 1 : 3; break;
    case NodeKind::Variable: prec = 3; break;
    case NodeKind::Sum: prec = 0; break;
    case NodeKind::Product: prec = 1; break;
    case NodeKind::Quotient: prec = 1; break;
    case NodeKind::Power: prec = 2; break;
    default: prec = 3; break;
  }
  bool parens = prec < parent_prec;
  if (parens) os << "(";
  switch (n.kind) {
    case NodeKind::Constant:
      os << n.value.str();
      break;
    case NodeKind::Variable:
      os << "x" << n.var;
      break;
    case NodeKind::Sum:
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        const ExprNode& k = n.kids[i].node();
        bool minus = false;
        if (i > 0) {
          // render "+ (-c)*e" as "- c*e" when the leading coefficient is negative
          if (is_negative_constant(k) ||
              (k.kind == NodeKind::Product && is_negative_constant(k.kids[0].node()))) {
            minus = true;
          }
          os << (minus ? " - " : " + ");
        }
        if (minus) {
          if (k.kind == NodeKind::Constant) {
            os << (-k.value).str();
          } else {
            Rational c = -k.kids[0].node().value;
            std::vector<Expr> rest(k.kids.begin() + 1, k.kids.end());
            Expr flipped = c.is_one() && rest.size() == 1
                               ? rest.front()
                               : Expr::product([&] {
                                   std::vector<Expr> f;
                                   f.push_back(Expr::constant(c));
                                   for (auto& r : rest) f.push_back(r);
                                   return f;
                                 }());
            print_child(flipped, os, 1);
          }
        } else {
          print_child(n.kids[i], os, i == 0 ? 0 : 1);
        }
      }
      break;
    case NodeKind::Product:
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        if (i > 0) os << "*";
        print_child(n.kids[i], os, 2);
      }
      break;
    case NodeKind::Quotient:
      print_child(n.kids[0], os, 2);
      os << "/";
      print_child(n.kids[1], os, 3);
      break;
    case NodeKind::Power:
      print_child(n.kids[0], os, 3);
      os << "^";
      if (n.exponent < 0)
        os << "(" << n.exponent << ")";
      else
        os << n.exponent;
      break;
    case NodeKind::Exp:
      os << "exp(";
      print_child(n.kids[0], os, 0);
      os << ")";
      break;
    case NodeKind::Log:
      os << "log(";
      print_child(n.kids[0], os, 0);
      os << ")";
      break;
    case NodeKind::Sin:
      os << "sin(";
      print_child(n.kids[0], os, 0);
      os << ")";
      break;
    case NodeKind::Cos:
      os << "cos(";
      print_child(n.kids[0], os, 0);
      os << ")";
      break;
  }
  if (parens) os << ")";
}

void print_latex(const ExprNode& n, std::ostream& os, int parent_prec) {
  int prec;
  switch (n.kind) {
    case NodeKind::Sum: prec = 0; break;
    case NodeKind::Product: prec = 1; break;
    case NodeKind::Constant: prec = n.value.num() < 0 ? 0 : 3; break;
    default: prec = 3; break;
  }
  bool parens = prec < parent_prec;
  if (parens) os << "\\left(";
  switch (n.kind) {
    case NodeKind::Constant:
      if (n.value.is_integer())
        os << n.value.num();
      else if (n.value.num() < 0)
        os << "-\\frac{" << -n.value.num() << "}{" << n.value.den() << "}";
      else
        os << "\\frac{" << n.value.num() << "}{" << n.value.den() << "}";
      break;
    case NodeKind::Variable:
      os << "x^{" << n.var << "}";
      break;
    case NodeKind::Sum:
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        if (i > 0) os << " + ";
        print_latex(n.kids[i].node(), os, 1);
      }
      break;
    case NodeKind::Product:
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        if (i > 0) os << "\\,";
        print_latex(n.kids[i].node(), os, 2);
      }
      break;
    case NodeKind::Quotient:
      os << "\\frac{";
      print_latex(n.kids[0].node(), os, 0);
      os << "}{";
      print_latex(n.kids[1].node(), os, 0);
      os << "}";
      break;
    case NodeKind::Power:
      print_latex(n.kids[0].node(), os, 3);
      os << "^{" << n.exponent << "}";
      break;
    case NodeKind::Exp:
      os << "\\exp\\left(";
      print_latex(n.kids[0].node(), os, 0);
      os << "\\right)";
      break;
    case NodeKind::Log:
      os << "\\log\\left(";
      print_latex(n.kids[0].node(), os, 0);
      os << "\\right)";
      break;
    case NodeKind::Sin:
      os << "\\sin\\left(";
      print_latex(n.kids[0].node(), os, 0);
      os << "\\right)";
      break;
    case NodeKind::Cos:
      os << "\\cos\\left(";
      print_latex(n.kids[0].node(), os, 0);
      os << "\\right)";
      break;
  }
  if (parens) os << "\\right)";
}

} // namespace

std::string Expr::str() const {
  std::ostringstream os;
  print_plain(*n_, os, 0);
  return os.str();
}

std::string Expr::latex() const {
  std::ostringstream os;
  print_latex(*n_, os, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// sampling and probabilistic equality

SampleDomain SampleDomain::box(int nvars, double lo, double hi, int samples, double tol,
                               std::uint64_t seed) {
  if (nvars < 1) throw ValidationError("sample domain needs at least one variable");
  if (samples < 1) throw ValidationError("sample count must be >= 1");
  if (!(tol > 0)) throw ValidationError("tolerance must be positive");
  if (!(lo < hi)) throw ValidationError("empty sample interval");
  SampleDomain d;
  d.intervals.assign(nvars, Interval{lo, hi});
  d.samples = samples;
  d.tol = tol;
  d.seed = seed;
  return d;
}

std::vector<std::vector<double>> SampleDomain::points() const {
  if (intervals.empty()) throw ValidationError("sample domain has no intervals");
  if (samples < 1) throw ValidationError("sample count must be >= 1");
  for (const auto& iv : intervals)
    if (!(iv.lo < iv.hi)) throw ValidationError("empty sample interval");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> pts(samples);
  for (auto& p : pts) {
    p.resize(intervals.size());
    for (std::size_t v = 0; v < intervals.size(); ++v) {
      // portable uniform in [0,1): top 53 bits of the raw draw
      double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      p[v] = intervals[v].lo + u * (intervals[v].hi - intervals[v].lo);
    }
  }
  return pts;
}

double max_defect(const Expr& e1, const Expr& e2, const SampleDomain& d) {
  double worst = 0.0;
  for (const auto& p : d.points()) {
    double a = e1.eval(p);
    double b = e2.eval(p);
    double defect = std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b)));
    worst = std::max(worst, defect);
  }
  return worst;
}

bool equal_prob(const Expr& e1, const Expr& e2, const SampleDomain& d) {
  for (const auto& p : d.points()) {
    double a = e1.eval(p);
    double b = e2.eval(p);
    if (std::abs(a - b) > d.tol * (1.0 + std::max(std::abs(a), std::abs(b)))) return false;
  }
  return true;
}

} // namespace densop
