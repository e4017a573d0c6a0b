#include "invarkit/invariance.hpp"

#include <numeric>
#include <stdexcept>

namespace invar {

HPolytope pre(const LinearSystem& sys, const HPolytope& V) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (V.dim != n) throw std::invalid_argument("pre: V dimension must match the system");
  if (is_empty(V)) return HPolytope::empty_set(n);

  std::vector<MappedSet> terms;
  terms.reserve(sys.dist_channels.size());
  for (const auto& ch : sys.dist_channels) terms.push_back({ch.F, ch.D});
  HPolytope target = pontryagin_diff_mapped(V, terms);
  if (is_empty(target)) return HPolytope::empty_set(n);

  // Lift to (x, u): target rows composed with [A B], then u in U.
  Matrix AB(n, n + m);
  AB.leftCols(n) = sys.A;
  AB.rightCols(m) = sys.B;
  HPolytope lifted = preimage(target, AB);

  HPolytope u_rows;
  u_rows.dim = n + m;
  u_rows.sys.normals = Matrix::Zero(sys.input_set.sys.normals.rows(), n + m);
  u_rows.sys.normals.rightCols(m) = sys.input_set.sys.normals;
  u_rows.sys.offsets = sys.input_set.sys.offsets;

  HPolytope joint = intersect(lifted, u_rows, false);
  std::vector<int> drop(m);
  std::iota(drop.begin(), drop.end(), n);
  return eliminate(joint, drop);
}

InvariantResult max_invariant_set(const LinearSystem& sys, const HPolytope& X,
                                  const InvariantOptions& opts) {
  if (X.dim != sys.state_dim())
    throw std::invalid_argument("max_invariant_set: X dimension must match the system");
  InvariantResult res;
  HPolytope V = remove_redundancy(X);
  if (is_empty(V)) {
    res.set = HPolytope::empty_set(X.dim);
    res.converged = true;
    return res;
  }
  for (int it = 1; it <= opts.max_iter; ++it) {
    HPolytope W = remove_redundancy(intersect(pre(sys, V), X, false));
    res.iterations = it;
    if (is_empty(W)) {
      res.set = HPolytope::empty_set(X.dim);
      res.converged = true;
      return res;
    }
    if (opts.check_monotone && !contains_set(V, W, opts.tol)) res.monotone = false;
    if (contains_set(V, W, opts.tol) && contains_set(W, V, opts.tol)) {
      res.set = std::move(V);
      res.converged = true;
      return res;
    }
    V = std::move(W);
  }
  res.set = std::move(V);
  res.converged = false;
  return res;
}

bool is_invariant(const LinearSystem& sys, const HPolytope& C, const HPolytope& X,
                  double tol) {
  if (is_empty(C)) return true;
  HPolytope P = pre(sys, C);
  return contains_set(P, C, tol) && contains_set(X, C, tol);
}

}  // namespace invar
