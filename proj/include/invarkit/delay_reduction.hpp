#pragma once

#include <vector>

#include "invarkit/invariance.hpp"
#include "invarkit/json_io.hpp"
#include "invarkit/system_model.hpp"

namespace invar {

enum class Canonicalize { Auto, On, Off };

struct ReduceOptions {
  InvariantOptions engine;
  /// Auto canonicalizes the assembled set only when the product dimension is
  /// at most 40; beyond that redundancy LPs dominate runtime without helping
  /// membership queries.
  Canonicalize canonicalize = Canonicalize::Auto;
};

struct PhaseTimings {
  double shrink_ms = 0;       // safe-set shrinking
  double fixed_point_ms = 0;  // invariant iteration on the reduced system
  double assemble_ms = 0;     // constraint family and stacking
  double canonicalize_ms = 0;
  double total_ms = 0;
};

struct ReducedInvariantResult {
  LinearSystem aux_system;
  HPolytope shrunk_safe_set;
  HPolytope c_hat;  // invariant set of the reduced system, over n
  /// Product-space conditions, one per step 0..tau, then the box constraint
  /// (safe set x input powers x previewed window powers).
  std::vector<HPolytope> constraint_family;
  HPolytope c_ext;  // intersection of the family
  bool converged = false;
  bool maximal = false;
  bool canonical = false;  // c_ext went through redundancy removal
  int aux_iterations = 0;
  PhaseTimings timings;
};

/// Reduced n-dim system: same A, B; channel i's matrix becomes A^(tau - p_i) F_i
/// where p_i is the channel's visible horizon (preview for the previewed
/// channel, 0 otherwise).
LinearSystem build_aux(const DelaySystemSpec& spec);

/// Safe set minus every disturbance contribution that can accrue while inputs
/// are in flight: X shrunk by A^(j-1) F_i D_i for j = 1..tau - p_i per channel.
HPolytope shrunk_safe(const DelaySystemSpec& spec);

/// Linear map z -> predicted state k steps ahead, using the pending inputs and
/// the visible disturbance window, with unknown disturbances at zero.
/// Valid for k = 0..tau; k = tau is the full-horizon predictor.
Matrix prediction_map(const DelaySystemSpec& spec, int k);

/// {z : predicted x(k) lies in X robustly against every disturbance that is
/// unknown at time 0}. Requires 0 <= k <= tau-1.
HPolytope constraint_k(const DelaySystemSpec& spec, int k);

/// {z : predicted x(tau) lies in c_hat}.
HPolytope constraint_tau(const DelaySystemSpec& spec, const HPolytope& c_hat);

/// Full pipeline: reduced invariant set, constraint family, assembled product
/// set. maximal is set when the reduced fixed point converged.
ReducedInvariantResult compute(const DelaySystemSpec& spec, const ReduceOptions& opts = {});

/// Membership in c_ext evaluated against the constraint family, without
/// needing the canonicalized intersection.
bool member(const DelaySystemSpec& spec, const ReducedInvariantResult& result,
            const AugmentedState& z, double tol = tol::kContain);

/// Bundle {spec_hash, shrunk_safe_set, c_hat, constraint_family, c_ext when
/// canonical, flags, timings}.
Json result_to_json(const DelaySystemSpec& spec, const ReducedInvariantResult& result);

}  // namespace invar
