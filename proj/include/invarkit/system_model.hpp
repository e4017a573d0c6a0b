#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "invarkit/polytope.hpp"

namespace invar {

/// One additive disturbance channel: x+ gains F d with d in D (bounded).
struct DisturbanceChannel {
  Matrix F;     // n x l
  HPolytope D;  // over l
};

/// Delay-free dynamics x(t+1) = A x(t) + B u(t) + sum_i F_i d_i(t) with
/// polytopic input set U and ambient state space Q (zero rows = R^n).
struct LinearSystem {
  Matrix A;
  Matrix B;
  std::vector<DisturbanceChannel> dist_channels;
  HPolytope state_space;  // Q over n
  HPolytope input_set;    // U over m

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }

  /// Dimensional consistency; U and every D bounded and nonempty.
  /// Throws std::invalid_argument on violation.
  void validate() const;
};

/// Delayed, optionally previewed problem: x(t+1) = A x(t) + B u(t-tau) + sum F_i d_i(t),
/// trajectories must stay in safe_set. The channel at previewed_channel (if any) has its
/// next `preview` samples visible to the controller.
struct DelaySystemSpec {
  LinearSystem base;
  int tau = 0;
  int preview = 0;  // p
  std::optional<int> previewed_channel;
  HPolytope safe_set;  // X over n

  /// Enforces: base validity, safe_set over n, X inside Q, preview in [0, tau]
  /// ("preview exceeds delay: unsupported" when p > tau), previewed_channel
  /// present iff preview > 0 and in range.
  void validate() const;

  /// Disturbance dimension of the previewed channel (0 when preview == 0).
  int preview_block_dim() const;
};

/// One point of the product space X x U^tau x D_p^p: current state, pending
/// inputs u_1..u_tau (u_1 is applied next), visible window d_{p,1}..d_{p,p}.
struct AugmentedState {
  Vector x;
  std::vector<Vector> input_history;
  std::vector<Vector> preview_window;

  Vector flatten() const;
  static AugmentedState unflatten(const DelaySystemSpec& spec, const Vector& z);
};

/// Delay-free equivalent with block-shift structure; dim = n + m*tau + l*p.
/// safe_set is X x U^tau x D_p^p over that dimension.
struct AugmentedSystem {
  LinearSystem sys;
  HPolytope safe_set;
  int n = 0, m = 0, l = 0, tau = 0, p = 0;

  int dim() const { return n + m * tau + l * p; }
};

/// Builds the augmented system. With preview, the previewed channel's fresh
/// sample enters the last window slot and the window head feeds the x rows.
AugmentedSystem augment(const DelaySystemSpec& spec);

DelaySystemSpec parse_spec(const std::string& json_text);
DelaySystemSpec load_spec(const std::string& path);
std::string spec_to_json(const DelaySystemSpec& spec);
void save_spec(const DelaySystemSpec& spec, const std::string& path);

/// Stable 64-bit hash (hex) of the canonical serialization.
std::string spec_hash(const DelaySystemSpec& spec);

/// The raw delayed recursion driven by explicit queues; cross-checks the
/// augmented representation.
class DelayedSimulator {
 public:
  /// history holds u(-tau)..u(-1), oldest first; must have size tau.
  DelayedSimulator(const DelaySystemSpec& spec, Vector x0, std::vector<Vector> history);

  /// Enqueues u(t), applies per-channel disturbances d_i(t), returns x(t+1).
  const Vector& step(const Vector& u, const std::vector<Vector>& disturbances);

  const Vector& state() const { return x_; }

 private:
  DelaySystemSpec spec_;
  Vector x_;
  std::deque<Vector> pending_;  // front = u(t-tau)
};

}  // namespace invar
