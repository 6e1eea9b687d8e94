#include <algorithm>
#include <cmath>
#include <random>

#include "densop/scenario.hpp"
#include "densop/verify.hpp"

namespace densop {
namespace verify {

namespace {

// defect between an expression in the new chart and one in the old chart,
// compared at pushed sample points
double image_defect(const Expr& in_new, const Expr& in_old, const ChartTransition& t) {
  double worst = 0.0;
  for (const auto& p : t.domain().points()) {
    std::vector<double> q = t.push(p);
    double a = in_new.eval(q);
    double b = in_old.eval(p);
    worst = std::max(worst, std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))));
  }
  return worst;
}

// defect between two expressions both in the new chart, at pushed points
double image_defect_new(const Expr& e1, const Expr& e2, const ChartTransition& t) {
  double worst = 0.0;
  for (const auto& p : t.domain().points()) {
    std::vector<double> q = t.push(p);
    double a = e1.eval(q);
    double b = e2.eval(q);
    worst = std::max(worst, std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))));
  }
  return worst;
}

Expr random_small_poly(int n, std::mt19937_64& rng) {
  static const Rational coefs[] = {Rational(1, 2), Rational(-1, 3), Rational(2, 5),
                                   Rational(1),    Rational(-3, 4), Rational(1, 5)};
  std::vector<Expr> terms{Expr::constant(coefs[rng() % 6])};
  int nterms = 1 + static_cast<int>(rng() % 2);
  for (int t = 0; t < nterms; ++t) {
    int v = 1 + static_cast<int>(rng() % n);
    int p = 1 + static_cast<int>(rng() % 2);
    terms.push_back(Expr::constant(coefs[rng() % 6]) * Expr::power(Expr::variable(v), p));
  }
  return Expr::sum(std::move(terms));
}

TensorDensity2 with_weight(const TensorDensity2& s, const Rational& w) {
  std::vector<Expr> comps;
  for (int i = s.lo(); i <= s.hi(); ++i)
    for (int j = s.lo(); j <= s.hi(); ++j) comps.push_back(s.at(i, j));
  return TensorDensity2(s.dim(), s.lo(), std::move(comps), w);
}

Expr curvature_term(const ProjectiveClass& p, int i, int j) {
  std::vector<Expr> terms;
  for (int s = p.lo(); s <= p.hi(); ++s)
    if (!p.at(s, i, j).is_zero()) terms.push_back(p.at(s, i, j).diff(s));
  for (int a = p.lo(); a <= p.hi(); ++a)
    for (int b = p.lo(); b <= p.hi(); ++b)
      if (!p.at(a, b, i).is_zero() && !p.at(b, a, j).is_zero())
        terms.push_back(Expr::product({Expr::integer(-1), p.at(a, b, i), p.at(b, a, j)}));
  return Expr::sum(std::move(terms));
}

// The restriction of the operator of a bracket to one fixed weight, written
// from the closed-form pencil coefficients. Used as a second route against
// apply(explicit_operator(...)).
Expr pencil_display(const DensityBracket& br, const ProjectiveClass& p, const Rational& mu,
                    const Expr& f) {
  const int n = br.dim, lo = br.lo;
  const Rational& w = br.weight;
  const Rational c_div(2, n + 4);
  const Rational c_gamma =
      Rational(2) * (w + Rational(n) * w + Rational(1)) / Rational((n + 1) * (n + 4)) +
      Rational(2) * mu;
  const Rational c_cls(n + 2, n + 4);
  const Rational c_theta =
      mu * ((Rational(2) * w + Rational(2 * n) * w - Rational(n)) / Rational((n + 1) * (n + 4)) +
            mu);
  const Rational c_curv = mu * Rational((n + 1) * (n + 2)) / Rational((n - 1) * (n + 4));

  std::vector<Expr> terms;
  for (int i = lo; i < lo + n; ++i)
    for (int j = lo; j < lo + n; ++j)
      if (!br.S(i, j).is_zero()) terms.push_back(br.S(i, j) * f.diff(i).diff(j));
  for (int i = lo; i < lo + n; ++i) {
    std::vector<Expr> div;
    for (int j = lo; j < lo + n; ++j)
      if (!br.S(i, j).is_zero()) div.push_back(br.S(i, j).diff(j));
    std::vector<Expr> cls;
    for (int j = lo; j < lo + n; ++j)
      for (int k = lo; k < lo + n; ++k)
        if (!br.S(j, k).is_zero() && !p.at(i, j, k).is_zero())
          cls.push_back(br.S(j, k) * p.at(i, j, k));
    Expr coef = Expr::constant(c_div) * Expr::sum(std::move(div)) +
                Expr::constant(c_gamma) * br.G(i) +
                Expr::constant(-c_cls) * Expr::sum(std::move(cls));
    terms.push_back(coef * f.diff(i));
  }
  std::vector<Expr> divg;
  for (int i = lo; i < lo + n; ++i)
    if (!br.G(i).is_zero()) divg.push_back(br.G(i).diff(i));
  std::vector<Expr> curv;
  for (int i = lo; i < lo + n; ++i)
    for (int j = lo; j < lo + n; ++j)
      if (!br.S(i, j).is_zero()) curv.push_back(br.S(i, j) * curvature_term(p, i, j));
  Expr zero_order = Expr::constant(c_div * mu) * Expr::sum(std::move(divg)) +
                    Expr::constant(c_theta) * br.theta +
                    Expr::constant(-c_curv) * Expr::sum(std::move(curv));
  terms.push_back(zero_order * f);
  return Expr::sum(std::move(terms));
}

struct BatteryContext {
  const Scenario& sc;
  Report& report;
  SampleDomain dom;       // base domain
  SampleDomain dom_ext;   // extended domain covering x0..xn

  void add(CheckResult r) { report.checks.push_back(std::move(r)); }

  CheckResult defect_check(const std::string& name, double worst, double tol,
                           const std::string& detail = "") {
    CheckResult r;
    r.name = name;
    r.worst_defect = worst;
    r.tolerance = tol;
    r.seed = dom.seed;
    r.detail = detail;
    r.status = worst <= tol ? CheckResult::Status::Pass : CheckResult::Status::Fail;
    return r;
  }
};

std::vector<Expr> test_functions(const Scenario& sc) {
  std::vector<Expr> fs;
  for (const auto& d : sc.densities) fs.push_back(d.coefficient);
  if (fs.empty()) {
    fs.push_back(parse_expression("x1*x2 + x1^2"));
    fs.push_back(parse_expression("x1^3 - x2 + 1/2"));
  }
  return fs;
}

void check_trace_free(BatteryContext& ctx, const ProjectiveClass& p) {
  ctx.add(ctx.defect_check("trace_free", p.trace_defect(ctx.dom), ctx.dom.tol));
}

void check_projective_equivalence(BatteryContext& ctx) {
  const int n = ctx.sc.dim;
  Connection rep = ctx.sc.representative();
  ProjectiveClass base = projective_class(rep);
  std::mt19937_64 rng(ctx.dom.seed + 17);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Expr> omega(n);
    for (auto& w : omega) w = random_small_poly(n, rng);
    Connection::Builder b(n, 1);
    for (int k = 1; k <= n; ++k)
      for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) {
          std::vector<Expr> terms{rep.at(k, i, j)};
          if (k == i) terms.push_back(omega[j - 1]);
          if (k == j) terms.push_back(omega[i - 1]);
          b.set(k, i, j, Expr::sum(std::move(terms)));
        }
    ProjectiveClass shifted = projective_class(b.build());
    for (int k = 1; k <= n; ++k)
      for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j)
          worst = std::max(worst, max_defect(base.at(k, i, j), shifted.at(k, i, j), ctx.dom));
  }
  ctx.add(ctx.defect_check("projective_equivalence", worst, ctx.dom.tol));
}

void check_laplacian_naturality(BatteryContext& ctx, const ProjectiveClass& p) {
  if (ctx.sc.transitions.empty() || !ctx.sc.tensor) return;
  TensorDensity2 s0 = with_weight(*ctx.sc.tensor, Rational(0));
  OperatorDescriptor desc = projective_laplacian(s0, p);
  Connection rep = ctx.sc.representative();
  double worst = 0.0;
  for (const auto& t : ctx.sc.transitions) {
    TensorDensity2 s_new = transform_tensor_density(s0, t);
    ProjectiveClass p_new = projective_class(transform_connection(rep, t));
    OperatorDescriptor desc_new = projective_laplacian(s_new, p_new);
    for (const auto& f : test_functions(ctx.sc)) {
      Expr lhs = desc_new.apply_to(t.to_new_chart(f));
      Expr rhs = desc.apply_to(f);
      worst = std::max(worst, image_defect(lhs, rhs, t));
    }
  }
  ctx.add(ctx.defect_check("laplacian_naturality", worst, 1e-7));
}

void check_flat_reduction(BatteryContext& ctx) {
  if (!ctx.sc.tensor) return;
  const int n = ctx.sc.dim;
  TensorDensity2 s0 = with_weight(*ctx.sc.tensor, Rational(0));
  OperatorDescriptor desc = projective_laplacian(s0, ProjectiveClass::zero(n));
  double worst = 0.0;
  for (int i = 1; i <= n; ++i) {
    std::vector<Expr> div;
    for (int j = 1; j <= n; ++j)
      if (!s0.at(i, j).is_zero()) div.push_back(s0.at(i, j).diff(j));
    Expr expected = Expr::constant(Rational(2, n + 3)) * Expr::sum(std::move(div));
    worst = std::max(worst, max_defect(desc.A(i), expected, ctx.dom));
  }
  ctx.add(ctx.defect_check("flat_reduction", worst, ctx.dom.tol));
}

void check_lift_transforms(BatteryContext& ctx, const ProjectiveClass& p) {
  if (ctx.sc.transitions.empty()) return;
  LiftedConnection lifted = lift_connection(p);
  Connection rep = ctx.sc.representative();
  double worst = 0.0;
  for (const auto& t : ctx.sc.transitions) {
    if (t.orientation() <= 0) continue;
    TildeTransition tt = tilde_transition(t);
    Connection transported = transform_connection(lifted, tt.chart());
    ProjectiveClass p_new = projective_class(transform_connection(rep, t));
    LiftedConnection lifted_new = lift_connection(p_new);
    for (int k = 0; k <= ctx.sc.dim; ++k)
      for (int i = 0; i <= ctx.sc.dim; ++i)
        for (int j = i; j <= ctx.sc.dim; ++j)
          worst = std::max(worst, image_defect_new(transported.at(k, i, j),
                                                   lifted_new.at(k, i, j), tt.chart()));
  }
  ctx.add(ctx.defect_check("lift_transforms", worst, 1e-7));
}

void check_induced_composition(BatteryContext& ctx, const ProjectiveClass& p) {
  ProjectiveClass direct = induced_projective_class(p);
  ProjectiveClass composed = projective_class(lift_connection(p));
  double worst = 0.0;
  for (int k = 0; k <= ctx.sc.dim; ++k)
    for (int i = 0; i <= ctx.sc.dim; ++i)
      for (int j = i; j <= ctx.sc.dim; ++j)
        worst = std::max(worst, max_defect(direct.at(k, i, j), composed.at(k, i, j), ctx.dom_ext));
  ctx.add(ctx.defect_check("induced_composition", worst, ctx.dom.tol));
}

void check_weight_eigenvector(BatteryContext& ctx) {
  double worst = 0.0;
  std::vector<Density> ds = ctx.sc.densities;
  for (int k = 0; k < 3; ++k)
    ds.push_back(random_monomial_density(ctx.sc.dim, ctx.dom.seed + 41 + k));
  for (const auto& d : ds) {
    Expr e = embed_density(d);
    worst = std::max(worst,
                     max_defect(e.diff(0), Expr::constant(d.weight) * e, ctx.dom_ext));
  }
  ctx.add(ctx.defect_check("weight_eigenvector", worst, ctx.dom.tol));
}

void compare_operators(BatteryContext& ctx, const std::string& name, const DensityOperator& a,
                       const DensityOperator& b, const SampleDomain& dom, double tol) {
  double worst = 0.0;
  const int lo = a.lo, n = a.dim;
  for (int i = lo; i < lo + n; ++i) {
    for (int j = lo; j < lo + n; ++j)
      worst = std::max(worst, max_defect(a.S(i, j), b.S(i, j), dom));
    worst = std::max(worst, max_defect(a.G(i), b.G(i), dom));
    worst = std::max(worst, max_defect(a.A(i), b.A(i), dom));
  }
  worst = std::max(worst, max_defect(a.theta, b.theta, dom));
  worst = std::max(worst, max_defect(a.b, b.b, dom));
  worst = std::max(worst, max_defect(a.c, b.c, dom));
  ctx.add(ctx.defect_check(name, worst, tol));
}

void check_operator_suite(BatteryContext& ctx, const ProjectiveClass& p) {
  if (!ctx.sc.tensor) return;
  const Scenario& sc = ctx.sc;
  DensityOperator op = main_operator(*sc.tensor, p);
  ctx.report.max_expr_nodes = std::max(ctx.report.max_expr_nodes, op.b.size());
  DensityBracket br = op.bracket_part();

  if (sc.check_requested("generates")) {
    CheckResult r = check_generates(op, br, ctx.dom);
    ctx.add(r);
    DensityOperator canon = canonical_operator(br);
    CheckResult r2 = check_generates(canon, br, ctx.dom);
    r2.name = "canonical_generates";
    ctx.add(r2);
  }

  if (sc.check_requested("constant_free")) {
    Density unit{Expr::integer(1), Rational(0)};
    Density out = apply(op, unit);
    std::string detail = out.coefficient.is_zero() ? "structurally zero" : "";
    ctx.add(ctx.defect_check("constant_free",
                             max_defect(out.coefficient, Expr::integer(0), ctx.dom), ctx.dom.tol,
                             detail));
  }

  if (sc.check_requested("cross_construction")) {
    DensityOperator lifted = tilde_operator_via_lift(br, p, ctx.dom_ext);
    compare_operators(ctx, "cross_construction_lift", lifted, op, ctx.dom, 1e-8);
    DensityOperator canon = canonical_operator(br);
    compare_operators(ctx, "cross_construction_canonical", canon, op, ctx.dom, 1e-8);
  }

  if (sc.check_requested("pencil")) {
    static const Rational mus[] = {Rational(-1),    Rational(0),     Rational(1, 3),
                                   Rational(1),     Rational(2),     Rational(-1, 2),
                                   Rational(3, 4),  Rational(5, 2),  Rational(-2),
                                   Rational(7, 5)};
    double worst = 0.0;
    Expr f = test_functions(sc).front();
    for (const Rational& mu : mus) {
      Density out = apply(op, Density{f, mu});
      Expr display = pencil_display(br, p, mu, f);
      worst = std::max(worst, max_defect(out.coefficient, display, ctx.dom));
    }
    ctx.add(ctx.defect_check("pencil", worst, ctx.dom.tol));
  }

  if (sc.check_requested("coordinate_invariance") && !sc.transitions.empty()) {
    Connection rep = sc.representative();
    double worst = 0.0;
    for (const auto& t : sc.transitions) {
      TensorDensity2 s_new = transform_tensor_density(*sc.tensor, t);
      ProjectiveClass p_new = projective_class(transform_connection(rep, t));
      DensityOperator op_new = main_operator(s_new, p_new);
      for (const auto& d : sc.densities.empty()
                               ? std::vector<Density>{{parse_expression("x1*x2"), Rational(1, 3)}}
                               : sc.densities) {
        Density lhs = apply(op_new, transform_density(d, t));
        Density rhs_old = apply(op, d);
        Density rhs = transform_density(rhs_old, t);
        worst = std::max(worst, image_defect_new(lhs.coefficient, rhs.coefficient, t));
      }
    }
    ctx.add(ctx.defect_check("coordinate_invariance", worst, 1e-6));
  }

  if (sc.check_requested("weight_zero_reduction")) {
    TensorDensity2 s0 = with_weight(*sc.tensor, Rational(0));
    DensityBracket ext = extend_bracket(s0, p);
    std::vector<Expr> upper = upper_connection(s0, p);
    double worst = 0.0;
    for (int i = 1; i <= sc.dim; ++i)
      worst = std::max(worst, max_defect(ext.G(i), upper[i - 1], ctx.dom));
    DensityOperator op0 = main_operator(s0, p);
    OperatorDescriptor lap = projective_laplacian(s0, p);
    for (const auto& f : test_functions(sc)) {
      Density out = apply(op0, Density{f, Rational(0)});
      worst = std::max(worst, max_defect(out.coefficient, lap.apply_to(f), ctx.dom));
    }
    ctx.add(ctx.defect_check("weight_zero_reduction", worst, ctx.dom.tol));
  }

  if (sc.check_requested("biderivation")) {
    TensorDensity2 s0 = with_weight(*sc.tensor, Rational(0));
    CheckResult r = check_biderivation(extend_bracket(s0, p), ctx.dom);
    ctx.add(r);
    Density rho1{parse_expression("exp(x1)"), Rational(1)};
    CheckResult r2 = check_biderivation(flat_density_bracket(s0, rho1, ctx.dom), ctx.dom);
    r2.name = "biderivation_flat";
    ctx.add(r2);
  }

  if (sc.check_requested("bracket_symmetry")) {
    double worst = 0.0;
    bool weights_ok = true;
    for (int k = 0; k < 5; ++k) {
      Density a = random_monomial_density(sc.dim, ctx.dom.seed + 501 + 2 * k);
      Density b = random_monomial_density(sc.dim, ctx.dom.seed + 502 + 2 * k);
      Density ab = generated_bracket(op, a, b);
      Density ba = generated_bracket(op, b, a);
      worst = std::max(worst, max_defect(ab.coefficient, ba.coefficient, ctx.dom));
      weights_ok = weights_ok && ab.weight == a.weight + b.weight + op.weight;
    }
    ctx.add(ctx.defect_check("bracket_symmetry", worst, ctx.dom.tol,
                             weights_ok ? "" : "weight additivity violated"));
  }

  if (sc.check_requested("self_adjoint")) {
    Rational mu = sc.densities.empty() ? Rational(1, 3) : sc.densities.front().weight;
    SelfAdjointnessReport rep = check_self_adjoint(op, mu, sc.quadrature, 5, ctx.dom.seed);
    ctx.report.max_expr_nodes = std::max(ctx.report.max_expr_nodes, rep.max_expr_nodes);
    double tol = sc.dim <= 2 ? 1e-4 : 1e-3;
    ctx.add(ctx.defect_check("self_adjoint", rep.worst, tol));

    // detection power: the deliberately shifted operator must score loudly
    CheckResult probe;
    probe.name = "self_adjoint_probe";
    probe.tolerance = 1e-2;
    probe.seed = ctx.dom.seed;
    probe.worst_defect = perturbation_probe_defect(op, mu, sc.quadrature);
    probe.status = probe.worst_defect >= 1e-2 ? CheckResult::Status::Pass
                                              : CheckResult::Status::Fail;
    probe.detail = "defect must exceed the tolerance for the corrupted operator";
    ctx.add(probe);
  }

  if (sc.rho) {
    if (sc.check_requested("rho_sigma_reduction")) {
      Density trivial{Expr::integer(1), Rational(0)};
      DensityOperator family = rho_sigma_operator(*sc.tensor, p, trivial, ctx.dom);
      compare_operators(ctx, "rho_sigma_reduction", family, op, ctx.dom, ctx.dom.tol);
    }
    if (sc.check_requested("rho_sigma_self_adjoint")) {
      DensityOperator family = rho_sigma_operator(*sc.tensor, p, *sc.rho, ctx.dom);
      Rational mu = sc.densities.empty() ? Rational(1, 3) : sc.densities.front().weight;
      SelfAdjointnessReport rep =
          check_self_adjoint_modified(family, mu, *sc.rho, sc.quadrature, 5, ctx.dom.seed);
      double tol = sc.dim <= 2 ? 1e-4 : 1e-3;
      ctx.add(ctx.defect_check("rho_sigma_self_adjoint", rep.worst, tol));
    }
  }
}

} // namespace

Report run_invariance_battery(const Scenario& sc) {
  Report report;
  report.scenario = sc.name;
  report.seed = sc.domain.seed;
  report.samples = sc.domain.samples;
  report.tol = sc.domain.tol;
  report.grid = sc.quadrature.points_per_axis;

  BatteryContext ctx{sc, report, sc.domain, sc.domain};
  // the base domain already covers x0..xn; keep a copy for extended checks
  ctx.dom_ext = sc.domain;

  ProjectiveClass p = sc.projective();

  // scenarios may assert that the construction itself must fail
  if (sc.expect_error) {
    CheckResult r;
    r.name = "expected_error";
    r.tolerance = 0;
    r.seed = sc.domain.seed;
    if (!sc.tensor) {
      r.status = CheckResult::Status::Error;
      r.detail = "expect_error scenarios need a tensor_density";
      report.checks.push_back(r);
      return report;
    }
    try {
      DensityOperator op = main_operator(*sc.tensor, p);
      (void)op;
      r.status = CheckResult::Status::Fail;
      r.detail = "expected " + *sc.expect_error + " but the construction succeeded";
    } catch (const ResonantWeight& e) {
      bool ok = *sc.expect_error == "ResonantWeight";
      r.status = ok ? CheckResult::Status::Pass : CheckResult::Status::Fail;
      r.detail = e.what();
    } catch (const ShiftedResonance& e) {
      bool ok = *sc.expect_error == "ShiftedResonance";
      r.status = ok ? CheckResult::Status::Pass : CheckResult::Status::Fail;
      r.detail = e.what();
    } catch (const NonpositiveDensity& e) {
      bool ok = *sc.expect_error == "NonpositiveDensity";
      r.status = ok ? CheckResult::Status::Pass : CheckResult::Status::Fail;
      r.detail = e.what();
    }
    report.checks.push_back(r);
    return report;
  }

  if (sc.check_requested("trace_free")) check_trace_free(ctx, p);
  if (sc.check_requested("projective_equivalence")) check_projective_equivalence(ctx);
  if (sc.check_requested("laplacian_naturality")) check_laplacian_naturality(ctx, p);
  if (sc.check_requested("flat_reduction")) check_flat_reduction(ctx);
  if (sc.check_requested("lift_transforms")) check_lift_transforms(ctx, p);
  if (sc.check_requested("induced_composition")) check_induced_composition(ctx, p);
  if (sc.check_requested("weight_eigenvector")) check_weight_eigenvector(ctx);
  check_operator_suite(ctx, p);

  return report;
}

} // namespace verify
} // namespace densop
