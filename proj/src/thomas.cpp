#include "densop/thomas.hpp"

namespace densop {

namespace {

// d_s P^s_ij - P^p_qi P^q_pj, the curvature-like combination entering both
// the fibre row of the lift and the induced class.
Expr class_curvature_term(const ProjectiveClass& p, int i, int j) {
  std::vector<Expr> terms;
  for (int s = p.lo(); s <= p.hi(); ++s)
    if (!p.at(s, i, j).is_zero()) terms.push_back(p.at(s, i, j).diff(s));
  for (int a = p.lo(); a <= p.hi(); ++a)
    for (int b = p.lo(); b <= p.hi(); ++b) {
      if (p.at(a, b, i).is_zero() || p.at(b, a, j).is_zero()) continue;
      terms.push_back(Expr::product({Expr::integer(-1), p.at(a, b, i), p.at(b, a, j)}));
    }
  return Expr::sum(std::move(terms));
}

} // namespace

LiftedConnection lift_connection(const ProjectiveClass& p) {
  const int n = p.dim();
  if (n < 2) throw DimensionError("the lift requires base dimension >= 2");
  if (p.lo() != 1) throw ValidationError("the lift expects a base projective class");

  Connection::Builder b(n + 1, 0);
  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = i; j <= n; ++j) b.set(k, i, j, p.at(k, i, j));

  const Expr diag = Expr::constant(Rational(-1, n + 1));
  for (int a = 0; a <= n; ++a) b.set(a, 0, a, diag);

  const Expr pref = Expr::constant(Rational(n + 1, n - 1));
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j) b.set(0, i, j, pref * class_curvature_term(p, i, j));

  return b.build();
}

ProjectiveClass induced_projective_class(const ProjectiveClass& p) {
  const int n = p.dim();
  if (n < 2) throw DimensionError("the induced class requires base dimension >= 2");
  if (p.lo() != 1) throw ValidationError("the induced class expects a base projective class");

  const int m = n + 1;
  std::vector<Expr> out(static_cast<std::size_t>(m) * m * m);
  auto set = [&](int k, int i, int j, const Expr& e) {
    out[(static_cast<std::size_t>(k) * m + i) * m + j] = e;
    out[(static_cast<std::size_t>(k) * m + j) * m + i] = e;
  };

  for (int k = 1; k <= n; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = i; j <= n; ++j) set(k, i, j, p.at(k, i, j));

  const Expr offdiag = Expr::constant(Rational(-1, (n + 1) * (n + 2)));
  for (int k = 1; k <= n; ++k) set(k, k, 0, offdiag);

  const Expr pref = Expr::constant(Rational(n + 1, n - 1));
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j) set(0, i, j, pref * class_curvature_term(p, i, j));

  set(0, 0, 0, Expr::constant(Rational(n, (n + 1) * (n + 2))));

  return ProjectiveClass(m, 0, std::move(out));
}

TildeTransition tilde_transition(const ChartTransition& base, Interval fibre) {
  if (base.lo() != 1) throw ValidationError("tilde transition expects a base transition");
  if (base.orientation() <= 0)
    throw ValidationError(
        "tilde transition requires a positive Jacobian determinant on the sample domain");

  const int n = base.dim();
  Expr logj = Expr::log(base.jacobian_det());

  std::vector<Expr> fwd, inv;
  fwd.push_back(Expr::variable(0) + logj);
  inv.push_back(Expr::variable(0) - base.to_new_chart(logj));
  for (int i = 1; i <= n; ++i) {
    fwd.push_back(base.forward(i));
    inv.push_back(base.inverse(i));
  }

  SampleDomain dom = base.domain();
  if (dom.intervals.empty())
    dom.intervals.push_back(fibre);
  else
    dom.intervals[0] = fibre;

  return TildeTransition(ChartTransition(n + 1, 0, std::move(fwd), std::move(inv), dom));
}

Expr embed_density(const Density& d) {
  return d.coefficient *
         Expr::exp(Expr::constant(d.weight) * Expr::variable(0));
}

} // namespace densop
