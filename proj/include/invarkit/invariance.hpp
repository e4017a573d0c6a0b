#pragma once

#include "invarkit/system_model.hpp"

namespace invar {

struct InvariantOptions {
  int max_iter = 500;
  double tol = 1e-6;
  /// When set, verifies V_{k+1} subset of V_k each step and records the outcome.
  bool check_monotone = false;
};

struct InvariantResult {
  HPolytope set;
  bool converged = false;
  int iterations = 0;
  /// Meaningful only when check_monotone was requested.
  bool monotone = true;
};

/// Controlled predecessor {x : exists u in U with Ax + Bu in V shrunk by
/// every disturbance channel}. Empty V yields empty.
HPolytope pre(const LinearSystem& sys, const HPolytope& V);

/// Fixed point of V0 = X, V_{k+1} = pre(V_k) meet X, with redundancy removal
/// each step. Non-convergence at max_iter returns the current iterate (an
/// outer approximation) with converged = false; callers must gate on
/// is_invariant before trusting it.
InvariantResult max_invariant_set(const LinearSystem& sys, const HPolytope& X,
                                  const InvariantOptions& opts = {});

/// Checks C subset of pre(C) meet X.
bool is_invariant(const LinearSystem& sys, const HPolytope& C, const HPolytope& X,
                  double tol = tol::kContain);

}  // namespace invar
