#include "densop/operators.hpp"

#include <cmath>

namespace densop {

namespace {

// d_s P^s_ij - P^p_qi P^q_pj (same combination as in the lift; reproduced
// here to keep this translation unit self-contained over the class API).
Expr curvature_term(const ProjectiveClass& p, int i, int j) {
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

Expr divergence_row(const std::vector<Expr>& m, int dim, int lo, int i) {
  std::vector<Expr> terms;
  for (int j = lo; j < lo + dim; ++j) {
    const Expr& e = m[(i - lo) * dim + (j - lo)];
    if (!e.is_zero()) terms.push_back(e.diff(j));
  }
  return Expr::sum(std::move(terms));
}

Expr class_contraction(const std::vector<Expr>& m, int dim, int lo, const ProjectiveClass& p,
                       int i) {
  std::vector<Expr> terms;
  for (int j = lo; j < lo + dim; ++j)
    for (int k = lo; k < lo + dim; ++k) {
      const Expr& s = m[(j - lo) * dim + (k - lo)];
      if (s.is_zero() || p.at(i, j, k).is_zero()) continue;
      terms.push_back(s * p.at(i, j, k));
    }
  return Expr::sum(std::move(terms));
}

Expr full_curvature_contraction(const std::vector<Expr>& m, int dim, int lo,
                                const ProjectiveClass& p) {
  std::vector<Expr> terms;
  for (int i = lo; i < lo + dim; ++i)
    for (int j = lo; j < lo + dim; ++j) {
      const Expr& s = m[(i - lo) * dim + (j - lo)];
      if (s.is_zero()) continue;
      Expr q = curvature_term(p, i, j);
      if (q.is_zero()) continue;
      terms.push_back(s * q);
    }
  return Expr::sum(std::move(terms));
}

void require_same_frame(int dim1, int lo1, int dim2, int lo2, const char* what) {
  if (dim1 != dim2 || lo1 != lo2) throw DimensionError(std::string(what) + ": dimensions disagree");
}

} // namespace

// ---------------------------------------------------------------------------
// brackets and operators as data

DensityBracket DensityBracket::from(const TensorDensity2& s, std::vector<Expr> gamma,
                                    Expr theta) {
  if (gamma.size() != static_cast<std::size_t>(s.dim()))
    throw ValidationError("bracket needs one gamma component per coordinate");
  DensityBracket br;
  br.dim = s.dim();
  br.lo = s.lo();
  br.weight = s.weight();
  br.second.reserve(static_cast<std::size_t>(s.dim()) * s.dim());
  for (int i = s.lo(); i <= s.hi(); ++i)
    for (int j = s.lo(); j <= s.hi(); ++j) br.second.push_back(s.at(i, j));
  br.gamma = std::move(gamma);
  br.theta = std::move(theta);
  return br;
}

void DensityBracket::validate() const {
  if (second.size() != static_cast<std::size_t>(dim) * dim ||
      gamma.size() != static_cast<std::size_t>(dim))
    throw ValidationError("bracket component counts do not match its dimension");
  for (int i = lo; i < lo + dim; ++i)
    for (int j = i + 1; j < lo + dim; ++j)
      if (!structurally_equal(S(i, j), S(j, i)))
        throw ValidationError("bracket S components must be symmetric");
}

Density apply(const DensityOperator& op, const Density& d) {
  if (d.coefficient.max_variable() >= op.lo + op.dim)
    throw DimensionError("density uses variables beyond the operator dimension");
  const Expr mu = Expr::constant(d.weight);
  const Expr mu2 = Expr::constant(d.weight * d.weight);
  const Expr& phi = d.coefficient;

  std::vector<Expr> dphi(op.dim);
  for (int i = op.lo; i < op.lo + op.dim; ++i) dphi[i - op.lo] = phi.diff(i);

  std::vector<Expr> terms;
  for (int i = op.lo; i < op.lo + op.dim; ++i)
    for (int j = op.lo; j < op.lo + op.dim; ++j) {
      const Expr& s = op.S(i, j);
      if (s.is_zero()) continue;
      terms.push_back(s * dphi[i - op.lo].diff(j));
    }
  for (int i = op.lo; i < op.lo + op.dim; ++i) {
    if (!op.G(i).is_zero())
      terms.push_back(Expr::product({Expr::integer(2), mu, op.G(i), dphi[i - op.lo]}));
    if (!op.A(i).is_zero()) terms.push_back(op.A(i) * dphi[i - op.lo]);
  }
  if (!op.theta.is_zero()) terms.push_back(Expr::product({mu2, op.theta, phi}));
  if (!op.b.is_zero()) terms.push_back(Expr::product({mu, op.b, phi}));
  if (!op.c.is_zero()) terms.push_back(op.c * phi);

  return Density{Expr::sum(std::move(terms)), d.weight + op.weight};
}

Density generated_bracket(const DensityOperator& op, const Density& d1, const Density& d2) {
  Density prod = density_mul(d1, d2);
  Density t1 = apply(op, prod);
  Density t2 = apply(op, d2);
  Density t3 = apply(op, d1);
  Density t4 = apply(op, Density{Expr::integer(1), Rational(0)});
  Expr coef = Expr::constant(Rational(1, 2)) *
              (t1.coefficient - d1.coefficient * t2.coefficient -
               t3.coefficient * d2.coefficient + prod.coefficient * t4.coefficient);
  return Density{coef, d1.weight + d2.weight + op.weight};
}

Density bracket_apply(const DensityBracket& br, const Density& d1, const Density& d2) {
  const Expr m1 = Expr::constant(d1.weight);
  const Expr m2 = Expr::constant(d2.weight);
  std::vector<Expr> terms;
  for (int i = br.lo; i < br.lo + br.dim; ++i)
    for (int j = br.lo; j < br.lo + br.dim; ++j) {
      if (br.S(i, j).is_zero()) continue;
      terms.push_back(br.S(i, j) * d1.coefficient.diff(i) * d2.coefficient.diff(j));
    }
  for (int i = br.lo; i < br.lo + br.dim; ++i) {
    if (br.G(i).is_zero()) continue;
    terms.push_back(Expr::product({m2, br.G(i), d1.coefficient.diff(i), d2.coefficient}));
    terms.push_back(Expr::product({m1, br.G(i), d2.coefficient.diff(i), d1.coefficient}));
  }
  if (!br.theta.is_zero())
    terms.push_back(Expr::product({m1, m2, br.theta, d1.coefficient, d2.coefficient}));
  return Density{Expr::sum(std::move(terms)), d1.weight + d2.weight + br.weight};
}

DensityOperator canonical_operator(const DensityBracket& br) {
  br.validate();
  DensityOperator op;
  op.dim = br.dim;
  op.lo = br.lo;
  op.weight = br.weight;
  op.second = br.second;
  op.gamma = br.gamma;
  op.theta = br.theta;
  const Expr wm1 = Expr::constant(br.weight - Rational(1));
  op.a.resize(br.dim);
  for (int i = br.lo; i < br.lo + br.dim; ++i)
    op.a[i - br.lo] = divergence_row(br.second, br.dim, br.lo, i) + wm1 * br.G(i);
  std::vector<Expr> divg;
  for (int i = br.lo; i < br.lo + br.dim; ++i)
    if (!br.G(i).is_zero()) divg.push_back(br.G(i).diff(i));
  op.b = Expr::sum(std::move(divg)) + wm1 * br.theta;
  op.c = Expr::integer(0);
  return op;
}

// ---------------------------------------------------------------------------
// gamma/theta and the canonical extension

namespace {

struct ResonanceCheck {
  Rational den_gamma;  // (n+3) - w(n+1)
  Rational den_theta;  // (n+2) - w(n+1)
  std::optional<std::string> warning;
};

ResonanceCheck check_resonances(int n, const Rational& w, bool shifted) {
  ResonanceCheck r;
  r.den_gamma = Rational(n + 3) - w * Rational(n + 1);
  r.den_theta = Rational(n + 2) - w * Rational(n + 1);
  const Rational res_gamma = Rational(n + 3, n + 1);
  const Rational res_theta = Rational(n + 2, n + 1);
  auto dist = [&](const Rational& resonance) {
    return std::abs((w - resonance).to_double());
  };
  auto raise = [&](const std::string& which, const Rational& value, int code) -> void {
    std::string msg = "weight " + w.str() + " is resonant: it equals " + which + " = " +
                      value.str() + " for dimension " + std::to_string(n);
    if (shifted)
      throw ShiftedResonance("effective " + msg, code);
    throw ResonantWeight(msg, code);
  };
  if (r.den_gamma.is_zero() || dist(res_gamma) <= 1e-12)
    raise("(n+3)/(n+1)", res_gamma, 1);
  if (r.den_theta.is_zero() || dist(res_theta) <= 1e-12)
    raise("(n+2)/(n+1)", res_theta, 2);
  double d1 = dist(res_gamma), d2 = dist(res_theta);
  if (d1 <= 1e-6 || d2 <= 1e-6) {
    r.warning = "weight " + w.str() + " is within " + std::to_string(std::min(d1, d2)) +
                " of the resonant value " + (d1 <= d2 ? res_gamma.str() : res_theta.str()) +
                "; coefficients are large and ill-conditioned";
  }
  return r;
}

GammaTheta gamma_theta_with_log(const TensorDensity2& s, const ProjectiveClass& p,
                                const Rational& w_eff, const Expr* log_rho, bool shifted) {
  require_same_frame(s.dim(), s.lo(), p.dim(), p.lo(), "gamma/theta");
  const int n = s.dim(), lo = s.lo(), hi = s.hi();
  if (n < 2) throw DimensionError("gamma/theta requires dimension >= 2");

  ResonanceCheck res = check_resonances(n, w_eff, shifted);
  const Rational pref_gamma = Rational(n + 1) / res.den_gamma;
  const Rational pref_theta = Rational(n + 1) / res.den_theta;
  const Rational log_coef(n + 4, n + 2);

  std::vector<Expr> second;
  second.reserve(static_cast<std::size_t>(n) * n);
  for (int i = lo; i <= hi; ++i)
    for (int j = lo; j <= hi; ++j) second.push_back(s.at(i, j));

  std::vector<Expr> dlog(n);
  if (log_rho)
    for (int j = lo; j <= hi; ++j) dlog[j - lo] = log_rho->diff(j);

  GammaTheta gt;
  gt.warning = res.warning;
  gt.gamma.resize(n);
  for (int i = lo; i <= hi; ++i) {
    std::vector<Expr> terms{divergence_row(second, n, lo, i),
                            class_contraction(second, n, lo, p, i)};
    if (log_rho) {
      std::vector<Expr> lterms;
      for (int j = lo; j <= hi; ++j)
        if (!s.at(i, j).is_zero() && !dlog[j - lo].is_zero())
          lterms.push_back(s.at(i, j) * dlog[j - lo]);
      terms.push_back(Expr::constant(log_coef) * Expr::sum(std::move(lterms)));
    }
    gt.gamma[i - lo] = Expr::constant(pref_gamma) * Expr::sum(std::move(terms));
  }

  std::vector<Expr> tterms;
  for (int i = lo; i <= hi; ++i)
    if (!gt.gamma[i - lo].is_zero()) tterms.push_back(gt.gamma[i - lo].diff(i));
  tterms.push_back(Expr::constant(Rational(n + 1, n - 1)) *
                   full_curvature_contraction(second, n, lo, p));
  if (log_rho) {
    std::vector<Expr> lterms;
    for (int i = lo; i <= hi; ++i)
      if (!gt.gamma[i - lo].is_zero() && !dlog[i - lo].is_zero())
        lterms.push_back(gt.gamma[i - lo] * dlog[i - lo]);
    tterms.push_back(Expr::constant(log_coef) * Expr::sum(std::move(lterms)));
  }
  gt.theta = Expr::constant(pref_theta) * Expr::sum(std::move(tterms));
  return gt;
}

} // namespace

GammaTheta gamma_theta(const TensorDensity2& s, const ProjectiveClass& p) {
  return gamma_theta_with_log(s, p, s.weight(), nullptr, false);
}

DensityOperator explicit_operator(const DensityBracket& br, const ProjectiveClass& p) {
  br.validate();
  require_same_frame(br.dim, br.lo, p.dim(), p.lo(), "explicit operator");
  const int n = br.dim, lo = br.lo;
  if (n < 2) throw DimensionError("the operator requires dimension >= 2");
  const Rational& w = br.weight;

  DensityOperator op;
  op.dim = n;
  op.lo = lo;
  op.weight = w;
  op.second = br.second;
  op.gamma = br.gamma;
  op.theta = br.theta;

  const Rational c_div(2, n + 4);
  const Rational c_gamma = (Rational(2) * (w + Rational(n) * w + Rational(1))) /
                           Rational((n + 1) * (n + 4));
  const Rational c_cls(n + 2, n + 4);
  const Rational c_theta = (Rational(2) * w + Rational(2 * n) * w - Rational(n)) /
                           Rational((n + 1) * (n + 4));
  const Rational c_curv =
      Rational((n + 1) * (n + 2)) / Rational((n - 1) * (n + 4));

  op.a.resize(n);
  for (int i = lo; i < lo + n; ++i) {
    op.a[i - lo] = Expr::constant(c_div) * divergence_row(br.second, n, lo, i) +
                   Expr::constant(c_gamma) * br.G(i) +
                   Expr::constant(-c_cls) * class_contraction(br.second, n, lo, p, i);
  }
  std::vector<Expr> divg;
  for (int i = lo; i < lo + n; ++i)
    if (!br.G(i).is_zero()) divg.push_back(br.G(i).diff(i));
  op.b = Expr::constant(c_div) * Expr::sum(std::move(divg)) +
         Expr::constant(c_theta) * br.theta +
         Expr::constant(-c_curv) * full_curvature_contraction(br.second, n, lo, p);
  op.c = Expr::integer(0);
  return op;
}

DensityOperator main_operator(const TensorDensity2& s, const ProjectiveClass& p) {
  GammaTheta gt = gamma_theta(s, p);
  DensityOperator op = explicit_operator(DensityBracket::from(s, gt.gamma, gt.theta), p);
  op.resonance_warning = gt.warning;
  return op;
}

DensityOperator tilde_operator_via_lift(const DensityBracket& br, const ProjectiveClass& p,
                                        std::optional<SampleDomain> grading_check) {
  br.validate();
  require_same_frame(br.dim, br.lo, p.dim(), p.lo(), "lift construction");
  const int n = br.dim;
  if (n < 2) throw DimensionError("the lift construction requires dimension >= 2");
  if (br.lo != 1) throw ValidationError("the lift construction expects a base bracket");

  ProjectiveClass extended = induced_projective_class(p);

  // the bracket as a symmetric tensor on the extended manifold
  const Expr grading = Expr::exp(Expr::constant(br.weight) * Expr::variable(0));
  const int m = n + 1;
  std::vector<Expr> tilde(static_cast<std::size_t>(m) * m);
  auto set = [&](int a, int b, const Expr& e) {
    tilde[static_cast<std::size_t>(a) * m + b] = e;
    tilde[static_cast<std::size_t>(b) * m + a] = e;
  };
  set(0, 0, grading * br.theta);
  for (int i = 1; i <= n; ++i) set(0, i, grading * br.G(i));
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j) set(i, j, grading * br.S(i, j));

  OperatorDescriptor desc = laplacian_descriptor(tilde, extended);

  SampleDomain dom = grading_check ? *grading_check : SampleDomain::box(m);
  if (dom.intervals.size() < static_cast<std::size_t>(m))
    throw ValidationError("grading-check domain does not cover the extended coordinates");

  // every coefficient must be of the form e^{w x0} (base function); check the
  // grading and substitute the fibre coordinate away
  auto strip = [&](const Expr& e) {
    Expr base = e.substitute(0, Expr::integer(0));
    if (!equal_prob(e, grading * base, dom))
      throw ValidationError("lift construction produced a coefficient off the expected grading");
    return base;
  };

  DensityOperator op;
  op.dim = n;
  op.lo = 1;
  op.weight = br.weight;
  op.second.resize(static_cast<std::size_t>(n) * n);
  op.gamma.resize(n);
  op.a.resize(n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      op.second[(i - 1) * n + (j - 1)] = strip(desc.S(i, j));
  for (int i = 1; i <= n; ++i) op.gamma[i - 1] = strip(desc.S(0, i));
  op.theta = strip(desc.S(0, 0));
  for (int i = 1; i <= n; ++i) op.a[i - 1] = strip(desc.A(i));
  op.b = strip(desc.A(0));
  op.c = Expr::integer(0);
  return op;
}

DensityBracket extend_bracket(const TensorDensity2& s, const ProjectiveClass& p) {
  if (!s.weight().is_zero())
    throw ValidationError("bracket extension requires a weight-0 tensor density");
  GammaTheta gt = gamma_theta(s, p);
  return DensityBracket::from(s, std::move(gt.gamma), std::move(gt.theta));
}

DensityOperator rho_sigma_operator(const TensorDensity2& s, const ProjectiveClass& p,
                                   const Density& rho, const SampleDomain& positivity_domain) {
  const int n = s.dim();
  if (n < 2) throw DimensionError("the rho/sigma family requires dimension >= 2");

  for (const auto& pt : positivity_domain.points()) {
    if (!(rho.coefficient.eval(pt) > 0.0))
      throw NonpositiveDensity("reference density is not positive at a sample point");
  }

  const Rational w_eff = s.weight() + Rational(n + 4, n + 2) * rho.weight;
  Expr log_rho = Expr::log(rho.coefficient);
  GammaTheta gt = gamma_theta_with_log(s, p, w_eff, &log_rho, true);
  DensityOperator op = explicit_operator(DensityBracket::from(s, gt.gamma, gt.theta), p);
  op.resonance_warning = gt.warning;
  return op;
}

DensityBracket flat_density_bracket(const TensorDensity2& s, const Density& rho1,
                                    const SampleDomain& positivity_domain) {
  if (!s.weight().is_zero())
    throw ValidationError("the flat bracket requires a weight-0 tensor density");
  if (rho1.weight != Rational(1))
    throw ValidationError("the flat bracket requires a weight-1 density");
  for (const auto& pt : positivity_domain.points()) {
    if (!(rho1.coefficient.eval(pt) > 0.0))
      throw NonpositiveDensity("reference density is not positive at a sample point");
  }

  const int n = s.dim(), lo = s.lo(), hi = s.hi();
  Expr log_rho = Expr::log(rho1.coefficient);
  std::vector<Expr> gamma_lower(n);
  for (int i = lo; i <= hi; ++i) gamma_lower[i - lo] = -log_rho.diff(i);

  std::vector<Expr> gamma(n);
  for (int i = lo; i <= hi; ++i) {
    std::vector<Expr> terms;
    for (int j = lo; j <= hi; ++j)
      if (!s.at(i, j).is_zero() && !gamma_lower[j - lo].is_zero())
        terms.push_back(s.at(i, j) * gamma_lower[j - lo]);
    gamma[i - lo] = Expr::sum(std::move(terms));
  }
  std::vector<Expr> tterms;
  for (int i = lo; i <= hi; ++i)
    if (!gamma[i - lo].is_zero() && !gamma_lower[i - lo].is_zero())
      tterms.push_back(gamma[i - lo] * gamma_lower[i - lo]);
  return DensityBracket::from(s, std::move(gamma), Expr::sum(std::move(tterms)));
}

} // namespace densop
