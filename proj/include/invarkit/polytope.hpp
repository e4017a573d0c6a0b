#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "invarkit/lp.hpp"

namespace invar {

/// Convex polyhedron {x : A x <= b} in halfspace form. A system with zero
/// rows is the whole space; any infeasible system represents the empty set.
struct HPolytope {
  HalfspaceSystem sys;
  int dim = 0;

  HPolytope() = default;
  HPolytope(Matrix a, Vector b);

  static HPolytope whole_space(int dim);
  static HPolytope empty_set(int dim);
  static HPolytope box(const Vector& lower, const Vector& upper);
  static HPolytope interval(double lo, double hi) {
    return box(Vector::Constant(1, lo), Vector::Constant(1, hi));
  }

  Eigen::Index rows() const { return sys.rows(); }
  const Matrix& A() const { return sys.normals; }
  const Vector& b() const { return sys.offsets; }
};

/// One mapped summand for a Pontryagin difference: the set map * set.
struct MappedSet {
  Matrix map;    // (P dim) x (set dim)
  HPolytope set;
};

bool is_empty(const HPolytope& p);

/// max over P of direction . x; +infinity when unbounded in that direction.
/// Throws std::domain_error on an empty polytope.
double support(const HPolytope& p, const Vector& direction);

HPolytope intersect(const HPolytope& p, const HPolytope& r, bool canonicalize = false);

/// P minus the Minkowski sum of the mapped sets, one support LP per row and
/// term; the sum is never constructed. An empty result is a valid output.
/// Throws std::domain_error if a term's set is empty or unbounded where it
/// matters.
HPolytope pontryagin_diff_mapped(const HPolytope& p, const std::vector<MappedSet>& terms);

/// {z : A (M z + c) <= b}.
HPolytope preimage(const HPolytope& p, const Matrix& m, const Vector& c);
HPolytope preimage(const HPolytope& p, const Matrix& m);  // c = 0

/// Exact orthogonal projection onto the coordinates not in `drop`, by
/// Fourier-Motzkin elimination one variable at a time (smallest
/// positive-times-negative row product first), with redundancy removal after
/// each elimination.
HPolytope eliminate(const HPolytope& p, std::vector<int> drop);

/// Minimal representation: every retained row, when maximized subject to the
/// others, exceeds its offset by more than tol::kRedundancy. Rows come back
/// unit-normalized.
HPolytope remove_redundancy(const HPolytope& p);

/// Unit-normalize rows; drops trivially true zero rows. An infeasible zero
/// row collapses the polytope to the canonical empty set.
HPolytope normalize_rows(const HPolytope& p);

/// R subset of P within tol (absolute, on unit-norm rows of P). Empty R is
/// contained in anything.
bool contains_set(const HPolytope& p, const HPolytope& r, double tol = tol::kContain);

bool contains_point(const HPolytope& p, const Vector& x, double tol = tol::kContain);

/// Mutual containment.
bool set_equal(const HPolytope& p, const HPolytope& r, double tol = tol::kContain);

/// Center and radius of the largest inscribed ball. Radius < 0 signals an
/// empty polytope; the radius is capped at 1e9 for unbounded systems.
std::pair<Vector, double> chebyshev_center(const HPolytope& p);

/// Substitute the fixed coordinates and return the polytope over the free
/// ones (their original relative order). Fixing every coordinate yields a
/// 0-dimensional feasibility marker.
HPolytope slice(const HPolytope& p, const std::vector<std::pair<int, double>>& fixed);

/// Exact per-axis bounds via support LPs: (lower, upper). Infinite entries
/// mark unbounded axes. Throws std::domain_error on an empty polytope.
std::pair<Vector, Vector> bounding_box(const HPolytope& p);

}  // namespace invar
