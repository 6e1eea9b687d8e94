#ifndef DENSOP_THOMAS_HPP
#define DENSOP_THOMAS_HPP

#include "densop/geom.hpp"

namespace densop {

// Connection on the extended manifold, indices 0..n with 0 the fibre
// direction. Index 0 is stored first in all extended arrays.
using LiftedConnection = Connection;

// The canonical lift of a projective class to a linear connection on the
// extended manifold. Requires base dimension >= 2.
LiftedConnection lift_connection(const ProjectiveClass& p);

// The projective class the lift induces on the extended manifold, written
// directly from its closed-form components. Coincides with
// projective_class(lift_connection(p)); the two routes are kept separate so
// the identity can be checked.
ProjectiveClass induced_projective_class(const ProjectiveClass& p);

// Extended-chart coordinate change: the base coordinates transform by `t`
// and the fibre coordinate picks up the log of the Jacobian modulus. The
// base transition must be orientation preserving.
class TildeTransition {
public:
  explicit TildeTransition(ChartTransition full) : full_(std::move(full)) {}
  const ChartTransition& chart() const { return full_; }

private:
  ChartTransition full_;
};

TildeTransition tilde_transition(const ChartTransition& base,
                                 Interval fibre = Interval{0.2, 1.2});

// phi(x) e^{w x0}: the density as a function on the extended manifold. The
// fibre derivative returns w times the embedding.
Expr embed_density(const Density& d);

} // namespace densop

#endif
