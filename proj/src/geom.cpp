#include "densop/geom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace densop {

// ---------------------------------------------------------------------------
// ChartTransition

ChartTransition::ChartTransition(int dim, int lo, std::vector<Expr> forward,
                                 std::vector<Expr> inverse, SampleDomain overlap)
    : dim_(dim), lo_(lo), forward_(std::move(forward)), inverse_(std::move(inverse)),
      domain_(std::move(overlap)) {
  if (dim_ < 1) throw DimensionError("transition dimension must be >= 1");
  if (lo_ != 0 && lo_ != 1) throw ValidationError("transition first index must be 0 or 1");
  if (forward_.size() != static_cast<std::size_t>(dim_) ||
      inverse_.size() != static_cast<std::size_t>(dim_))
    throw ValidationError("transition needs one forward and one inverse map per coordinate");
  if (domain_.intervals.size() < static_cast<std::size_t>(lo_ + dim_))
    throw ValidationError("transition sample domain does not cover all coordinates");

  std::vector<Expr> jac(dim_ * dim_);
  for (int a = 0; a < dim_; ++a)
    for (int b = 0; b < dim_; ++b) jac[a * dim_ + b] = forward_[a].diff(lo_ + b);
  det_ = matrix_determinant(jac, dim_);

  const auto points = domain_.points();
  for (const auto& p : points) {
    double d = det_.eval(p);
    int sign = d > 0 ? 1 : (d < 0 ? -1 : 0);
    if (sign == 0) throw ValidationError("transition Jacobian vanishes at a sample point");
    if (orientation_ == 0) orientation_ = sign;
    if (sign != orientation_)
      throw ValidationError("transition Jacobian changes sign on the sample domain");
  }

  // round trips: g(f(x)) = x at sampled x, f(g(y)) = y at sampled image points
  for (const auto& p : points) {
    std::vector<double> q = push(p);
    for (int i = lo_; i <= hi(); ++i) {
      double back = inverse_[i - lo_].eval(q);
      if (std::abs(back - p[i]) > domain_.tol * (1.0 + std::abs(p[i])))
        throw ValidationError("transition inverse does not undo the forward map (coordinate x" +
                              std::to_string(i) + ")");
      double fwd_of_inv = forward_[i - lo_].compose(inverse_, lo_).eval(q);
      if (std::abs(fwd_of_inv - q[i]) > domain_.tol * (1.0 + std::abs(q[i])))
        throw ValidationError("transition forward does not undo the inverse map (coordinate x" +
                              std::to_string(i) + ")");
    }
  }
}

ChartTransition ChartTransition::identity(int n, const SampleDomain& overlap) {
  std::vector<Expr> fwd, inv;
  for (int i = 1; i <= n; ++i) {
    fwd.push_back(Expr::variable(i));
    inv.push_back(Expr::variable(i));
  }
  return ChartTransition(n, 1, fwd, inv, overlap);
}

Expr ChartTransition::jacobian_modulus() const {
  return orientation_ < 0 ? -det_ : det_;
}

Expr ChartTransition::to_new_chart(const Expr& e_old) const {
  return e_old.compose(inverse_, lo_);
}

Expr ChartTransition::to_old_chart(const Expr& e_new) const {
  return e_new.compose(forward_, lo_);
}

std::vector<double> ChartTransition::push(const std::vector<double>& point) const {
  std::vector<double> out = point;
  for (int i = lo_; i <= hi(); ++i) out[i] = forward_[i - lo_].eval(point);
  return out;
}

Expr matrix_determinant(const std::vector<Expr>& m, int dim) {
  if (static_cast<int>(m.size()) != dim * dim)
    throw ValidationError("matrix size does not match dimension");
  if (dim == 1) return m[0];
  if (dim == 2) return m[0] * m[3] - m[1] * m[2];
  std::vector<Expr> terms;
  int sign = 1;
  for (int c = 0; c < dim; ++c) {
    std::vector<Expr> minor;
    minor.reserve((dim - 1) * (dim - 1));
    for (int r = 1; r < dim; ++r)
      for (int cc = 0; cc < dim; ++cc)
        if (cc != c) minor.push_back(m[r * dim + cc]);
    terms.push_back(
        Expr::product({Expr::integer(sign), m[c], matrix_determinant(minor, dim - 1)}));
    sign = -sign;
  }
  return Expr::sum(std::move(terms));
}

// ---------------------------------------------------------------------------
// Connection / ProjectiveClass

Connection::Connection(int dim, int lo, std::vector<Expr> coefficients)
    : dim_(dim), lo_(lo), c_(std::move(coefficients)) {
  if (dim_ < 1) throw DimensionError("connection dimension must be >= 1");
  if (lo_ != 0 && lo_ != 1) throw ValidationError("connection first index must be 0 or 1");
  if (c_.size() != static_cast<std::size_t>(dim_) * dim_ * dim_)
    throw ValidationError("connection needs dim^3 coefficients");
  for (int k = lo_; k <= hi(); ++k)
    for (int i = lo_; i <= hi(); ++i)
      for (int j = i + 1; j <= hi(); ++j)
        if (!structurally_equal(at(k, i, j), at(k, j, i)))
          throw ValidationError("connection coefficients must be symmetric in the lower pair");
}

std::size_t Connection::flat(int k, int i, int j) const {
  return (static_cast<std::size_t>(k - lo_) * dim_ + (i - lo_)) * dim_ + (j - lo_);
}

Connection Connection::zero(int dim, int lo) {
  return Connection(dim, lo, std::vector<Expr>(dim * dim * dim));
}

Connection::Builder::Builder(int dim, int lo) : dim_(dim), lo_(lo), c_(dim * dim * dim) {}

Connection::Builder& Connection::Builder::set(int k, int i, int j, Expr e) {
  auto idx = [&](int a, int b, int c) {
    return (static_cast<std::size_t>(a - lo_) * dim_ + (b - lo_)) * dim_ + (c - lo_);
  };
  c_[idx(k, i, j)] = e;
  c_[idx(k, j, i)] = std::move(e);
  return *this;
}

Connection Connection::Builder::build() { return Connection(dim_, lo_, std::move(c_)); }

ProjectiveClass ProjectiveClass::zero(int dim, int lo) {
  return ProjectiveClass(dim, lo, std::vector<Expr>(dim * dim * dim));
}

double ProjectiveClass::trace_defect(const SampleDomain& d) const {
  double worst = 0.0;
  for (int j = lo_; j <= hi(); ++j) {
    std::vector<Expr> t1, t2;
    for (int s = lo_; s <= hi(); ++s) {
      t1.push_back(at(s, s, j));
      t2.push_back(at(s, j, s));
    }
    worst = std::max(worst, max_defect(Expr::sum(t1), Expr::integer(0), d));
    worst = std::max(worst, max_defect(Expr::sum(t2), Expr::integer(0), d));
  }
  return worst;
}

void ProjectiveClass::validate_traces(const SampleDomain& d) const {
  double defect = trace_defect(d);
  if (defect > d.tol)
    throw ValidationError("projective class traces do not vanish (defect " +
                          std::to_string(defect) + ")");
}

// ---------------------------------------------------------------------------
// TensorDensity2 / Density

TensorDensity2::TensorDensity2(int dim, int lo, std::vector<Expr> components, Rational weight)
    : dim_(dim), lo_(lo), s_(std::move(components)), weight_(weight) {
  if (dim_ < 1) throw DimensionError("tensor density dimension must be >= 1");
  if (lo_ != 0 && lo_ != 1) throw ValidationError("tensor density first index must be 0 or 1");
  if (s_.size() != static_cast<std::size_t>(dim_) * dim_)
    throw ValidationError("tensor density needs dim^2 components");
  for (int i = lo_; i <= hi(); ++i)
    for (int j = i + 1; j <= hi(); ++j)
      if (!structurally_equal(at(i, j), at(j, i)))
        throw ValidationError("tensor density components must be symmetric");
}

TensorDensity2 TensorDensity2::kronecker(int dim, Rational weight, int lo) {
  std::vector<Expr> s(dim * dim);
  for (int i = 0; i < dim; ++i) s[i * dim + i] = Expr::integer(1);
  return TensorDensity2(dim, lo, std::move(s), weight);
}

TensorDensity2::Builder::Builder(int dim, Rational weight, int lo)
    : dim_(dim), lo_(lo), weight_(weight), s_(dim * dim) {}

TensorDensity2::Builder& TensorDensity2::Builder::set(int i, int j, Expr e) {
  s_[(i - lo_) * dim_ + (j - lo_)] = e;
  s_[(j - lo_) * dim_ + (i - lo_)] = std::move(e);
  return *this;
}

TensorDensity2 TensorDensity2::Builder::build() {
  return TensorDensity2(dim_, lo_, std::move(s_), weight_);
}

// ---------------------------------------------------------------------------
// operations

Expr OperatorDescriptor::apply_to(const Expr& f) const {
  std::vector<Expr> terms;
  std::vector<Expr> df(dim);
  for (int i = lo; i < lo + dim; ++i) df[i - lo] = f.diff(i);
  for (int i = lo; i < lo + dim; ++i)
    for (int j = lo; j < lo + dim; ++j) {
      const Expr& s = S(i, j);
      if (s.is_zero()) continue;
      terms.push_back(s * df[i - lo].diff(j));
    }
  for (int i = lo; i < lo + dim; ++i) {
    const Expr& a = A(i);
    if (a.is_zero()) continue;
    terms.push_back(a * df[i - lo]);
  }
  return Expr::sum(std::move(terms));
}

ProjectiveClass projective_class(const Connection& c) {
  const int n = c.dim();
  if (n < 2) throw DimensionError("projective class requires dimension >= 2");
  const int lo = c.lo(), hi = c.hi();

  std::vector<Expr> trace(n);
  for (int j = lo; j <= hi; ++j) {
    std::vector<Expr> terms;
    for (int s = lo; s <= hi; ++s) terms.push_back(c.at(s, s, j));
    trace[j - lo] = Expr::sum(std::move(terms));
  }

  const Rational inv(1, n + 1);
  std::vector<Expr> out(static_cast<std::size_t>(n) * n * n);
  auto idx = [&](int k, int i, int j) {
    return (static_cast<std::size_t>(k - lo) * n + (i - lo)) * n + (j - lo);
  };
  for (int k = lo; k <= hi; ++k)
    for (int i = lo; i <= hi; ++i)
      for (int j = i; j <= hi; ++j) {
        std::vector<Expr> terms{c.at(k, i, j)};
        if (k == i) terms.push_back(Expr::constant(-inv) * trace[j - lo]);
        if (k == j) terms.push_back(Expr::constant(-inv) * trace[i - lo]);
        Expr v = Expr::sum(std::move(terms));
        out[idx(k, i, j)] = v;
        out[idx(k, j, i)] = v;
      }
  return ProjectiveClass(n, lo, std::move(out));
}

Connection transform_connection(const Connection& c, const ChartTransition& t) {
  if (c.dim() != t.dim() || c.lo() != t.lo())
    throw DimensionError("connection and transition dimensions disagree");
  const int n = c.dim(), lo = c.lo(), hi = c.hi();

  // dnew^c/dold^k as functions of the old coordinates, then pushed to the
  // new chart; dold^i/dnew^a and the second derivatives directly in the new
  // chart from the inverse maps.
  std::vector<Expr> fwd_jac(n * n), inv_jac(n * n);
  for (int a = lo; a <= hi; ++a)
    for (int b = lo; b <= hi; ++b) {
      fwd_jac[(a - lo) * n + (b - lo)] = t.to_new_chart(t.forward(a).diff(b));
      inv_jac[(a - lo) * n + (b - lo)] = t.inverse(a).diff(b);
    }

  std::vector<Expr> gamma_new(static_cast<std::size_t>(n) * n * n);
  auto idx = [&](int k, int i, int j) {
    return (static_cast<std::size_t>(k - lo) * n + (i - lo)) * n + (j - lo);
  };

  // pull the old coefficients to the new chart once
  std::vector<Expr> old_in_new(static_cast<std::size_t>(n) * n * n);
  for (int k = lo; k <= hi; ++k)
    for (int i = lo; i <= hi; ++i)
      for (int j = lo; j <= hi; ++j) old_in_new[idx(k, i, j)] = t.to_new_chart(c.at(k, i, j));

  for (int cc = lo; cc <= hi; ++cc)
    for (int a = lo; a <= hi; ++a)
      for (int b = a; b <= hi; ++b) {
        std::vector<Expr> terms;
        for (int k = lo; k <= hi; ++k) {
          const Expr& dnew_dold = fwd_jac[(cc - lo) * n + (k - lo)];
          std::vector<Expr> inner;
          for (int i = lo; i <= hi; ++i)
            for (int j = lo; j <= hi; ++j) {
              const Expr& g = old_in_new[idx(k, i, j)];
              if (g.is_zero()) continue;
              inner.push_back(Expr::product(
                  {inv_jac[(i - lo) * n + (a - lo)], inv_jac[(j - lo) * n + (b - lo)], g}));
            }
          Expr second = t.inverse(k).diff(a).diff(b);
          if (!second.is_zero()) inner.push_back(second);
          if (!inner.empty()) terms.push_back(dnew_dold * Expr::sum(std::move(inner)));
        }
        Expr v = Expr::sum(std::move(terms));
        gamma_new[idx(cc, a, b)] = v;
        gamma_new[idx(cc, b, a)] = v;
      }
  return Connection(n, lo, std::move(gamma_new));
}

TensorDensity2 transform_tensor_density(const TensorDensity2& s, const ChartTransition& t) {
  if (s.dim() != t.dim() || s.lo() != t.lo())
    throw DimensionError("tensor density and transition dimensions disagree");
  const int n = s.dim(), lo = s.lo(), hi = s.hi();

  std::vector<Expr> fwd_jac(n * n);
  for (int a = lo; a <= hi; ++a)
    for (int b = lo; b <= hi; ++b)
      fwd_jac[(a - lo) * n + (b - lo)] = t.to_new_chart(t.forward(a).diff(b));

  Expr jmod_new = t.to_new_chart(t.jacobian_modulus());
  Expr jfactor = Expr::pow_rational(jmod_new, -s.weight());

  std::vector<Expr> out(static_cast<std::size_t>(n) * n);
  for (int a = lo; a <= hi; ++a)
    for (int b = a; b <= hi; ++b) {
      std::vector<Expr> terms;
      for (int i = lo; i <= hi; ++i)
        for (int j = lo; j <= hi; ++j) {
          Expr sij = t.to_new_chart(s.at(i, j));
          if (sij.is_zero()) continue;
          terms.push_back(Expr::product(
              {fwd_jac[(a - lo) * n + (i - lo)], fwd_jac[(b - lo) * n + (j - lo)], sij}));
        }
      Expr v = jfactor * Expr::sum(std::move(terms));
      out[(a - lo) * n + (b - lo)] = v;
      out[(b - lo) * n + (a - lo)] = v;
    }
  return TensorDensity2(n, lo, std::move(out), s.weight());
}

Density transform_density(const Density& d, const ChartTransition& t) {
  Expr jmod_new = t.to_new_chart(t.jacobian_modulus());
  return Density{Expr::pow_rational(jmod_new, -d.weight) * t.to_new_chart(d.coefficient),
                 d.weight};
}

OperatorDescriptor laplacian_descriptor(const std::vector<Expr>& second,
                                        const ProjectiveClass& p) {
  const int n = p.dim(), lo = p.lo(), hi = p.hi();
  if (second.size() != static_cast<std::size_t>(n) * n)
    throw DimensionError("second-order coefficients do not match the class dimension");
  auto S = [&](int i, int j) -> const Expr& { return second[(i - lo) * n + (j - lo)]; };

  const Rational c_div(2, n + 3);
  const Rational c_cls(n + 1, n + 3);

  std::vector<Expr> first(n);
  for (int i = lo; i <= hi; ++i) {
    std::vector<Expr> div_terms, cls_terms;
    for (int j = lo; j <= hi; ++j) {
      if (!S(i, j).is_zero()) div_terms.push_back(S(i, j).diff(j));
      for (int k = lo; k <= hi; ++k) {
        if (S(j, k).is_zero() || p.at(i, j, k).is_zero()) continue;
        cls_terms.push_back(S(j, k) * p.at(i, j, k));
      }
    }
    first[i - lo] = Expr::constant(c_div) * Expr::sum(std::move(div_terms)) +
                    Expr::constant(-c_cls) * Expr::sum(std::move(cls_terms));
  }
  return OperatorDescriptor{n, lo, second, std::move(first)};
}

OperatorDescriptor projective_laplacian(const TensorDensity2& s, const ProjectiveClass& p) {
  if (s.dim() != p.dim() || s.lo() != p.lo())
    throw DimensionError("tensor density and projective class dimensions disagree");
  if (p.dim() < 2) throw DimensionError("projective Laplacian requires dimension >= 2");
  if (!s.weight().is_zero())
    throw ValidationError("projective Laplacian requires a weight-0 tensor density");
  std::vector<Expr> second;
  second.reserve(static_cast<std::size_t>(s.dim()) * s.dim());
  for (int i = s.lo(); i <= s.hi(); ++i)
    for (int j = s.lo(); j <= s.hi(); ++j) second.push_back(s.at(i, j));
  return laplacian_descriptor(second, p);
}

std::vector<Expr> upper_connection(const TensorDensity2& s, const ProjectiveClass& p) {
  if (s.dim() != p.dim() || s.lo() != p.lo())
    throw DimensionError("tensor density and projective class dimensions disagree");
  if (p.dim() < 2) throw DimensionError("upper connection requires dimension >= 2");
  if (!s.weight().is_zero())
    throw ValidationError("upper connection requires a weight-0 tensor density");
  const int n = s.dim(), lo = s.lo(), hi = s.hi();
  const Rational pref(n + 1, n + 3);
  std::vector<Expr> out(n);
  for (int i = lo; i <= hi; ++i) {
    std::vector<Expr> terms;
    for (int j = lo; j <= hi; ++j) {
      if (!s.at(i, j).is_zero()) terms.push_back(s.at(i, j).diff(j));
      for (int k = lo; k <= hi; ++k) {
        if (s.at(j, k).is_zero() || p.at(i, j, k).is_zero()) continue;
        terms.push_back(s.at(j, k) * p.at(i, j, k));
      }
    }
    out[i - lo] = Expr::constant(pref) * Expr::sum(std::move(terms));
  }
  return out;
}

} // namespace densop
