#include "densop/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

namespace densop {
namespace verify {

namespace {

double portable_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Rational rationalize(double x, long long denominator) {
  return Rational(static_cast<long long>(std::llround(x * denominator)), denominator);
}

} // namespace

void QuadratureSpec::validate() const {
  if (box.empty()) throw ValidationError("quadrature box is empty");
  for (const auto& iv : box)
    if (!(iv.lo < iv.hi)) throw ValidationError("quadrature box has an empty interval");
  if (points_per_axis < 11 || points_per_axis % 2 == 0)
    throw ValidationError("points per axis must be an odd integer >= 11");
}

Bump make_bump(const std::vector<Rational>& center, const Rational& radius,
               const Rational& weight, const Rational& amplitude) {
  if (center.empty()) throw ValidationError("bump needs a center");
  if (!(radius.to_double() > 0)) throw ValidationError("bump radius must be positive");
  const int n = static_cast<int>(center.size());

  // r^2 = sum ((x_i - c_i)/radius)^2 over base coordinates x1..xn
  std::vector<Expr> r2_terms;
  for (int i = 1; i <= n; ++i) {
    Expr d = Expr::variable(i) + Expr::constant(-center[i - 1]);
    r2_terms.push_back(Expr::constant(Rational(1) / (radius * radius)) * Expr::power(d, 2));
  }
  Expr r2 = Expr::sum(std::move(r2_terms));
  Expr phi = Expr::constant(amplitude) *
             Expr::exp(Expr::quotient(Expr::integer(-1), Expr::integer(1) - r2));

  Ball ball;
  ball.radius = radius.to_double();
  for (const auto& c : center) ball.center.push_back(c.to_double());
  return Bump{Density{phi, weight}, ball};
}

Bump random_bump(const QuadratureSpec& q, const Rational& weight, std::uint64_t seed,
                 double radius_scale) {
  q.validate();
  std::mt19937_64 rng(seed);
  const int n = static_cast<int>(q.box.size());

  double min_half = q.box[0].hi - q.box[0].lo;
  for (const auto& iv : q.box) min_half = std::min(min_half, (iv.hi - iv.lo) / 2);
  // generous radii: wide supports overlap reliably and keep the boundary
  // layer of the bump resolvable on the default grids
  double rlo = 0.74 * min_half * radius_scale;
  double rhi = 0.86 * min_half * radius_scale;
  Rational radius = rationalize(rlo + portable_uniform(rng) * (rhi - rlo), 1 << 10);

  std::vector<Rational> center(n);
  for (int i = 0; i < n; ++i) {
    double margin = radius.to_double() + 0.02 * (q.box[i].hi - q.box[i].lo);
    double lo = q.box[i].lo + margin, hi = q.box[i].hi - margin;
    if (!(lo < hi)) throw ValidationError("quadrature box too small for a bump of this radius");
    center[i] = rationalize(lo + portable_uniform(rng) * (hi - lo), 1 << 10);
  }
  return make_bump(center, radius, weight);
}

std::pair<Bump, Bump> random_bump_pair(const QuadratureSpec& q, const Rational& w1,
                                       const Rational& w2, std::uint64_t seed) {
  Bump first = random_bump(q, w1, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const int n = static_cast<int>(q.box.size());
  const double r1 = first.support.radius;

  std::vector<Rational> center(n);
  Rational radius = rationalize(r1 * (0.95 + 0.05 * portable_uniform(rng)), 1 << 10);
  for (int attempt = 0; attempt < 64; ++attempt) {
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      double offset = (portable_uniform(rng) - 0.5) * 0.1 * r1;
      double c = first.support.center[i] + offset;
      double margin = radius.to_double() + 0.02 * (q.box[i].hi - q.box[i].lo);
      if (c - margin < q.box[i].lo || c + margin > q.box[i].hi) {
        ok = false;
        break;
      }
      center[i] = rationalize(c, 1 << 10);
    }
    if (ok) return {first, make_bump(center, radius, w2)};
  }
  // fall back to concentric supports
  for (int i = 0; i < n; ++i) center[i] = rationalize(first.support.center[i], 1 << 10);
  return {first, make_bump(center, rationalize(0.9 * r1, 1 << 10), w2)};
}

// ---------------------------------------------------------------------------
// integration

namespace {

void require_support_inside(const Ball& ball, const QuadratureSpec& q) {
  if (ball.center.size() != q.box.size())
    throw ValidationError("support dimension does not match the quadrature box");
  for (std::size_t i = 0; i < ball.center.size(); ++i) {
    if (!(ball.center[i] - ball.radius > q.box[i].lo) ||
        !(ball.center[i] + ball.radius < q.box[i].hi))
      throw ValidationError("support escapes the quadrature box");
  }
}

// squared scaled distance to the ball center; >= 1 means outside the support
double scaled_r2(const Ball& ball, const std::vector<double>& point) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < ball.center.size(); ++i) {
    double d = (point[i + 1] - ball.center[i]) / ball.radius;
    r2 += d * d;
  }
  return r2;
}

} // namespace

double integrate(const std::vector<Factor>& factors, const QuadratureSpec& q) {
  q.validate();
  for (const auto& f : factors)
    if (f.support) require_support_inside(*f.support, q);

  const int n = static_cast<int>(q.box.size());
  const int N = q.points_per_axis;
  std::vector<double> h(n);
  for (int a = 0; a < n; ++a) h[a] = (q.box[a].hi - q.box[a].lo) / (N - 1);

  auto simpson_w = [N](int idx) -> double {
    if (idx == 0 || idx == N - 1) return 1.0;
    return idx % 2 == 1 ? 4.0 : 2.0;
  };

  // per-slice partial sums over the first axis keep the reduction order
  // independent of the thread count
  std::vector<double> slice_sum(N, 0.0);

  auto worker = [&](int begin, int end) {
    std::vector<double> point(n + 1, 0.0);  // point[0] (x0) unused by base densities
    std::vector<int> idx(n, 0);
    for (int i0 = begin; i0 < end; ++i0) {
      double acc = 0.0;
      idx.assign(n, 0);
      idx[0] = i0;
      // odometer over the remaining axes
      while (true) {
        double w = 1.0;
        for (int a = 0; a < n; ++a) {
          point[a + 1] = q.box[a].lo + idx[a] * h[a];
          w *= simpson_w(idx[a]);
        }
        double value = 1.0;
        for (const auto& f : factors) {
          if (f.support && scaled_r2(*f.support, point) >= 1.0 - 1e-12) {
            value = 0.0;
            break;
          }
        }
        if (value != 0.0)
          for (const auto& f : factors) value *= f.coefficient.eval(point);
        acc += w * value;

        int a = n - 1;
        while (a >= 1) {
          if (++idx[a] < N) break;
          idx[a] = 0;
          --a;
        }
        if (a < 1) break;
      }
      slice_sum[i0] = acc;
    }
  };

  unsigned threads = std::min<unsigned>(std::thread::hardware_concurrency(), 8);
  if (threads <= 1 || n == 1 || N < 32) {
    worker(0, N);
  } else {
    std::vector<std::thread> pool;
    int chunk = (N + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      int b = t * chunk, e = std::min(N, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }

  double total = 0.0;
  for (double s : slice_sum) total += s;
  double scale = 1.0;
  for (int a = 0; a < n; ++a) scale *= h[a] / 3.0;
  return total * scale;
}

// ---------------------------------------------------------------------------
// scalar products

namespace {

double pairing(const Factor& f1, const Factor& f2, const std::optional<Factor>& rho,
               double weight_sum, const QuadratureSpec& q) {
  if (std::abs(weight_sum - 1.0) > 1e-12) return 0.0;
  std::vector<Factor> factors{f1, f2};
  if (rho) factors.push_back(*rho);
  return integrate(factors, q);
}

} // namespace

double scalar_product(const Density& d1, const Density& d2, const QuadratureSpec& q) {
  return pairing(Factor(d1.coefficient), Factor(d2.coefficient), {},
                 (d1.weight + d2.weight).to_double(), q);
}

double scalar_product(const Bump& b1, const Bump& b2, const QuadratureSpec& q) {
  return pairing(Factor(b1), Factor(b2), {},
                 (b1.density.weight + b2.density.weight).to_double(), q);
}

double scalar_product(const Bump& b1, const Density& d2, const QuadratureSpec& q) {
  return pairing(Factor(b1), Factor(d2.coefficient), {},
                 (b1.density.weight + d2.weight).to_double(), q);
}

double modified_scalar_product(const Density& d1, const Density& d2, const Density& rho,
                               const QuadratureSpec& q) {
  return pairing(Factor(d1.coefficient), Factor(d2.coefficient), Factor(rho.coefficient),
                 (d1.weight + d2.weight + rho.weight).to_double(), q);
}

double modified_scalar_product(const Bump& b1, const Bump& b2, const Density& rho,
                               const QuadratureSpec& q) {
  return pairing(Factor(b1), Factor(b2), Factor(rho.coefficient),
                 (b1.density.weight + b2.density.weight + rho.weight).to_double(), q);
}

// ---------------------------------------------------------------------------
// self-adjointness

namespace {

SelfAdjointnessReport self_adjoint_impl(const DensityOperator& op, const Rational& mu,
                                        const Density* rho, const QuadratureSpec& q, int pairs,
                                        std::uint64_t seed) {
  q.validate();
  if (static_cast<int>(q.box.size()) != op.dim)
    throw ValidationError("quadrature box dimension does not match the operator");

  const Rational sigma = rho ? rho->weight : Rational(0);
  const Rational psi_weight = Rational(1) - mu - op.weight - sigma;

  SelfAdjointnessReport rep;
  for (int k = 0; k < pairs; ++k) {
    auto [phi, psi] = random_bump_pair(q, mu, psi_weight, seed + 977 * k);

    Density op_phi = apply(op, phi.density);
    Density op_psi = apply(op, psi.density);
    rep.max_expr_nodes = std::max(rep.max_expr_nodes, op_phi.coefficient.size());

    std::vector<Factor> lhs{Factor(op_phi.coefficient, phi.support), Factor(psi)};
    std::vector<Factor> rhs{Factor(phi), Factor(op_psi.coefficient, psi.support)};
    if (rho) {
      lhs.push_back(Factor(rho->coefficient));
      rhs.push_back(Factor(rho->coefficient));
    }
    double i1 = integrate(lhs, q);
    double i2 = integrate(rhs, q);
    double defect = std::abs(i1 - i2) / (1.0 + std::abs(i1));
    rep.defects.push_back(defect);
    rep.worst = std::max(rep.worst, defect);
  }
  return rep;
}

} // namespace

SelfAdjointnessReport check_self_adjoint(const DensityOperator& op, const Rational& mu,
                                         const QuadratureSpec& q, int pairs,
                                         std::uint64_t seed) {
  return self_adjoint_impl(op, mu, nullptr, q, pairs, seed);
}

SelfAdjointnessReport check_self_adjoint_modified(const DensityOperator& op, const Rational& mu,
                                                  const Density& rho, const QuadratureSpec& q,
                                                  int pairs, std::uint64_t seed) {
  return self_adjoint_impl(op, mu, &rho, q, pairs, seed);
}

double self_adjoint_defect(const DensityOperator& op, const Bump& phi, const Bump& psi,
                           const QuadratureSpec& q) {
  Density op_phi = apply(op, phi.density);
  Density op_psi = apply(op, psi.density);
  double i1 = integrate({Factor(op_phi.coefficient, phi.support), Factor(psi)}, q);
  double i2 = integrate({Factor(phi), Factor(op_psi.coefficient, psi.support)}, q);
  return std::abs(i1 - i2) / (1.0 + std::abs(i1));
}

double perturbation_probe_defect(const DensityOperator& op, const Rational& mu,
                                 const QuadratureSpec& q) {
  q.validate();
  const int n = static_cast<int>(q.box.size());
  if (n != op.dim) throw ValidationError("quadrature box dimension does not match the operator");

  // pinned pair: radius 0.35, centers offset by 0.2 of the shortest extent
  // along x1, amplitude 4; the asymmetric overlap makes the first-order
  // shift integrate to something visible against <op phi, psi>
  double extent = q.box[0].hi - q.box[0].lo;
  for (const auto& iv : q.box) extent = std::min(extent, iv.hi - iv.lo);
  Rational radius = rationalize(0.35 * extent, 1 << 10);
  std::vector<Rational> c1(n), c2(n);
  for (int i = 0; i < n; ++i) {
    double mid = (q.box[i].lo + q.box[i].hi) / 2;
    c1[i] = rationalize(mid, 1 << 10);
    c2[i] = rationalize(mid, 1 << 10);
  }
  c1[0] = rationalize((q.box[0].lo + q.box[0].hi) / 2 - 0.1 * extent, 1 << 10);
  c2[0] = rationalize((q.box[0].lo + q.box[0].hi) / 2 + 0.1 * extent, 1 << 10);

  const Rational amp(4);
  Bump phi = make_bump(c1, radius, mu, amp);
  Bump psi = make_bump(c2, radius, Rational(1) - mu - op.weight, amp);

  DensityOperator shifted = op;
  for (auto& a : shifted.a) a = a + Expr::constant(Rational(1, 10));
  return self_adjoint_defect(shifted, phi, psi, q);
}

// ---------------------------------------------------------------------------
// algebraic checks

Density random_monomial_density(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  static const Rational coefs[] = {Rational(1),     Rational(-1),    Rational(1, 2),
                                   Rational(2),     Rational(-1, 3), Rational(3, 4),
                                   Rational(-2, 5), Rational(5, 3)};
  static const Rational weights[] = {Rational(0),     Rational(1),      Rational(-1),
                                     Rational(1, 2),  Rational(-1, 2),  Rational(1, 3),
                                     Rational(2, 3),  Rational(3, 5)};
  std::vector<Expr> factors{Expr::constant(coefs[rng() % 8])};
  for (int i = 1; i <= n; ++i) {
    int p = static_cast<int>(rng() % 4);
    if (p > 0) factors.push_back(Expr::power(Expr::variable(i), p));
  }
  return Density{Expr::product(std::move(factors)), weights[rng() % 8]};
}

CheckResult check_generates(const DensityOperator& op, const DensityBracket& br,
                            const SampleDomain& dom) {
  CheckResult r;
  r.name = "generates";
  r.tolerance = dom.tol;
  r.seed = dom.seed;

  auto compare = [&](const Density& a, const Density& b, const std::string& what) {
    Density got = generated_bracket(op, a, b);
    Density want = bracket_apply(br, a, b);
    if (got.weight != want.weight) {
      r.status = CheckResult::Status::Fail;
      r.detail += what + ": weight mismatch; ";
      return;
    }
    double defect = max_defect(got.coefficient, want.coefficient, dom);
    r.worst_defect = std::max(r.worst_defect, defect);
    if (!equal_prob(got.coefficient, want.coefficient, dom)) {
      r.status = CheckResult::Status::Fail;
      r.detail += what + " disagrees; ";
    }
  };

  const Density volume{Expr::integer(1), Rational(1)};
  for (int i = op.lo; i < op.lo + op.dim; ++i) {
    for (int j = i; j < op.lo + op.dim; ++j)
      compare(Density{Expr::variable(i), Rational(0)}, Density{Expr::variable(j), Rational(0)},
              "{x" + std::to_string(i) + ",x" + std::to_string(j) + "}");
    compare(Density{Expr::variable(i), Rational(0)}, volume,
            "{x" + std::to_string(i) + ",|Dx|}");
  }
  compare(volume, volume, "{|Dx|,|Dx|}");

  for (int k = 0; k < 10; ++k)
    compare(random_monomial_density(op.dim, dom.seed + 101 + 2 * k),
            random_monomial_density(op.dim, dom.seed + 102 + 2 * k),
            "random pair " + std::to_string(k));
  return r;
}

CheckResult check_biderivation(const DensityBracket& br, const SampleDomain& dom) {
  CheckResult r;
  r.name = "biderivation";
  r.tolerance = dom.tol;
  r.seed = dom.seed;

  DensityOperator op = canonical_operator(br);
  auto bracket = [&](const Density& a, const Density& b) { return generated_bracket(op, a, b); };

  for (int k = 0; k < 10; ++k) {
    Density a = random_monomial_density(br.dim, dom.seed + 301 + 3 * k);
    Density b = random_monomial_density(br.dim, dom.seed + 302 + 3 * k);
    Density c = random_monomial_density(br.dim, dom.seed + 303 + 3 * k);

    Density sym1 = bracket(a, b), sym2 = bracket(b, a);
    double d1 = max_defect(sym1.coefficient, sym2.coefficient, dom);

    Density lhs = bracket(a, density_mul(b, c));
    Density rhs = density_mul(bracket(a, b), c);
    Density rhs2 = density_mul(b, bracket(a, c));
    double d2 = max_defect(lhs.coefficient, rhs.coefficient + rhs2.coefficient, dom);

    r.worst_defect = std::max({r.worst_defect, d1, d2});
    if (d1 > dom.tol || d2 > dom.tol) {
      r.status = CheckResult::Status::Fail;
      r.detail += "triple " + std::to_string(k) + " fails; ";
    }
    if (lhs.weight != a.weight + b.weight + c.weight + br.weight) {
      r.status = CheckResult::Status::Fail;
      r.detail += "triple " + std::to_string(k) + " weight mismatch; ";
    }
  }
  return r;
}

bool Report::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed(); });
}

std::string Report::text() const {
  std::ostringstream os;
  os << "# densop verification report\n";
  os << "scenario=" << scenario << "\n";
  os << "seed=" << seed << "\n";
  os << "samples=" << samples << "\n";
  os << "tol=" << tol << "\n";
  os << "grid=" << grid << "\n";
  os << "max_expr_nodes=" << max_expr_nodes << "\n";
  for (const auto& c : checks) {
    os << "check=" << c.name << " status="
       << (c.status == CheckResult::Status::Pass
               ? "PASS"
               : c.status == CheckResult::Status::Fail ? "FAIL" : "ERROR")
       << " worst_defect=" << c.worst_defect << " tolerance=" << c.tolerance
       << " seed=" << c.seed;
    if (!c.detail.empty()) os << " detail=\"" << c.detail << "\"";
    os << "\n";
  }
  os << "result=" << (all_pass() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

} // namespace verify
} // namespace densop
