#ifndef DENSOP_GEOM_HPP
#define DENSOP_GEOM_HPP

#include <optional>
#include <vector>

#include "densop/expr.hpp"

namespace densop {

// Index convention used throughout: every geometric object stores its first
// index in `lo()`. Objects on the base manifold use indices 1..n (matching
// variables x1..xn); objects on the extended manifold use 0..n, with index 0
// the fibre direction x0. Variable indices and tensor indices coincide.

// A coordinate change with an explicit inverse. `forward[a]` is the new
// coordinate of index lo+a as an expression in the old coordinates;
// `inverse[a]` is the old coordinate as an expression in the new ones.
// Construction validates the two round trips and a nonvanishing Jacobian of
// fixed sign on the overlap sample domain.
class ChartTransition {
public:
  ChartTransition(int dim, int lo, std::vector<Expr> forward, std::vector<Expr> inverse,
                  SampleDomain overlap);

  static ChartTransition identity(int n, const SampleDomain& overlap);

  int dim() const { return dim_; }
  int lo() const { return lo_; }
  int hi() const { return lo_ + dim_ - 1; }

  const Expr& forward(int i) const { return forward_.at(i - lo_); }
  const Expr& inverse(int i) const { return inverse_.at(i - lo_); }
  const SampleDomain& domain() const { return domain_; }

  // Symbolic determinant of the forward Jacobian, as a function of the old
  // coordinates.
  const Expr& jacobian_det() const { return det_; }
  // +1 or -1, fixed over the overlap domain.
  int orientation() const { return orientation_; }
  // |det|: det or -det depending on orientation.
  Expr jacobian_modulus() const;

  // Express a function of the old coordinates in the new ones (compose with
  // the inverse maps).
  Expr to_new_chart(const Expr& e_old) const;
  // Express a function of the new coordinates in the old ones.
  Expr to_old_chart(const Expr& e_new) const;

  // Image of a sample point under the forward maps. Entries below lo() are
  // copied unchanged.
  std::vector<double> push(const std::vector<double>& point) const;

private:
  int dim_;
  int lo_;
  std::vector<Expr> forward_;
  std::vector<Expr> inverse_;
  SampleDomain domain_;
  Expr det_;
  int orientation_ = 0;
};

// Symmetric determinant of a dim x dim matrix of expressions (cofactor
// expansion; intended for small dim).
Expr matrix_determinant(const std::vector<Expr>& m, int dim);

// Torsion-free linear connection coefficients G^k_ij, structurally symmetric
// in the lower pair.
class Connection {
public:
  Connection(int dim, int lo, std::vector<Expr> coefficients);
  static Connection zero(int dim, int lo = 1);

  int dim() const { return dim_; }
  int lo() const { return lo_; }
  int hi() const { return lo_ + dim_ - 1; }

  const Expr& at(int k, int i, int j) const { return c_[flat(k, i, j)]; }

  class Builder {
  public:
    Builder(int dim, int lo = 1);
    // sets both (k,i,j) and (k,j,i)
    Builder& set(int k, int i, int j, Expr e);
    Connection build();

  private:
    int dim_, lo_;
    std::vector<Expr> c_;
  };

protected:
  std::size_t flat(int k, int i, int j) const;
  int dim_, lo_;
  std::vector<Expr> c_;
};

// Trace-free part of a connection. Shares the Connection storage/symmetry;
// both traces vanish identically for instances produced by
// projective_class(), and are validated probabilistically for instances
// loaded from scenario files.
class ProjectiveClass : public Connection {
public:
  ProjectiveClass(int dim, int lo, std::vector<Expr> coefficients)
      : Connection(dim, lo, std::move(coefficients)) {}
  static ProjectiveClass zero(int dim, int lo = 1);

  // Largest sampled trace magnitude, for validation and reports.
  double trace_defect(const SampleDomain& d) const;
  void validate_traces(const SampleDomain& d) const;
};

// Symmetric contravariant 2-index density S^ij of weight `weight`.
class TensorDensity2 {
public:
  TensorDensity2(int dim, int lo, std::vector<Expr> components, Rational weight);
  static TensorDensity2 kronecker(int dim, Rational weight = Rational(0), int lo = 1);

  int dim() const { return dim_; }
  int lo() const { return lo_; }
  int hi() const { return lo_ + dim_ - 1; }
  const Rational& weight() const { return weight_; }

  const Expr& at(int i, int j) const { return s_[(i - lo_) * dim_ + (j - lo_)]; }

  class Builder {
  public:
    Builder(int dim, Rational weight, int lo = 1);
    Builder& set(int i, int j, Expr e);  // sets both (i,j) and (j,i)
    TensorDensity2 build();

  private:
    int dim_, lo_;
    Rational weight_;
    std::vector<Expr> s_;
  };

private:
  int dim_, lo_;
  std::vector<Expr> s_;
  Rational weight_;
};

// phi(x) |Dx|^weight with phi in the base variables only.
struct Density {
  Expr coefficient;
  Rational weight;
};

inline Density density_mul(const Density& a, const Density& b) {
  return Density{a.coefficient * b.coefficient, a.weight + b.weight};
}

// Second-order descriptor: f -> sum_ij S^ij d_i d_j f + sum_i A^i d_i f.
struct OperatorDescriptor {
  int dim;
  int lo;
  std::vector<Expr> second;  // dim*dim, symmetric
  std::vector<Expr> first;   // dim

  const Expr& S(int i, int j) const { return second[(i - lo) * dim + (j - lo)]; }
  const Expr& A(int i) const { return first[i - lo]; }
  Expr apply_to(const Expr& f) const;
};

// Trace adjustment P^k_ij = G^k_ij - (d+1)^-1 (delta^k_i T_j + delta^k_j T_i)
// with T_j the common trace of G.
ProjectiveClass projective_class(const Connection& c);

// Classical transformation law with the inhomogeneous second-derivative term,
// expressed in the new coordinates via the inverse maps.
Connection transform_connection(const Connection& c, const ChartTransition& t);

// S'^ab = J^-w (dnew^a/dold^i)(dnew^b/dold^j) S^ij in the new coordinates.
TensorDensity2 transform_tensor_density(const TensorDensity2& s, const ChartTransition& t);

// phi' = J^-w phi in the new coordinates.
Density transform_density(const Density& d, const ChartTransition& t);

// Generic second-order descriptor over a symmetric matrix of expressions and
// a projective class of the same index range; the scalar prefactors depend on
// the index count.
OperatorDescriptor laplacian_descriptor(const std::vector<Expr>& second,
                                        const ProjectiveClass& p);

// The weight-0 invariant operator attached to S and the class.
OperatorDescriptor projective_laplacian(const TensorDensity2& s, const ProjectiveClass& p);

// Coefficients of the associated upper connection in the volume bundle.
std::vector<Expr> upper_connection(const TensorDensity2& s, const ProjectiveClass& p);

} // namespace densop

#endif
