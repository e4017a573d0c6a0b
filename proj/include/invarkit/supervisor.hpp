#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "invarkit/delay_reduction.hpp"

namespace invar {

/// Scalar- or vector-valued disturbance source. Samples are memoized, so a
/// given (signal, t) pair always returns the same value; every emitted value
/// is clamped into the channel's bounding box and clamps are counted.
class DisturbanceSignal {
 public:
  static DisturbanceSignal constant(Vector value);
  static DisturbanceSignal sine(Vector amplitude, double period, double phase);
  static DisturbanceSignal uniform_random(std::uint64_t seed);
  /// Replays the given samples; holds the last one past the end.
  static DisturbanceSignal replay(std::vector<Vector> samples);

  /// Value at step t, clamped into D's bounding box. D must stay the same
  /// across calls on one signal.
  const Vector& sample(const HPolytope& D, int t);

  int clamp_events() const { return clamp_events_; }

 private:
  enum class Kind { Constant, Sine, UniformRandom, Replay };
  Kind kind_ = Kind::Constant;
  Vector value_;
  Vector amplitude_;
  double period_ = 1;
  double phase_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Vector> replay_;

  std::vector<Vector> cache_;
  std::uint64_t rng_state_ = 0;
  bool box_ready_ = false;
  Vector box_lo_, box_hi_;
  int clamp_events_ = 0;

  Vector raw_sample(int t);
  double next_unit();
};

struct StepRecord {
  int t = 0;
  Vector x;
  Vector u_nominal;
  Vector u_applied;
  std::vector<Vector> disturbances;  // one per channel, as applied at t
  Vector x_hat;                      // tau-step prediction from the current buffers
  bool safe = true;
  bool admissible_empty = false;
};

struct SimTrace {
  std::vector<StepRecord> records;  // t = 0..steps-1
  Vector final_state;
  bool final_safe = true;
  std::optional<int> first_violation;  // step index; records.size() means the final state
};

/// Inputs that keep the prediction inside c_hat against every disturbance of
/// the reduced system: {u in U : A x_hat + B u in c_hat shrunk by the reduced
/// channels}. z must satisfy member(spec, result, z).
HPolytope admissible_inputs(const DelaySystemSpec& spec, const ReducedInvariantResult& result,
                            const AugmentedState& z);

/// Admissible point closest to u_nom in the max-coordinate sense; ties are
/// broken toward the smallest total coordinate change, so untouched
/// coordinates stay at u_nom. Returns u_nom unchanged when already inside.
/// Throws SolverError when admissible is empty.
Vector project_input(const Vector& u_nom, const HPolytope& admissible);

/// Closed loop with delay and preview buffers. u_nom = -K z (K may have zero
/// rows for the zero controller). When supervised and the state is inside
/// c_ext, u_applied projects u_nom into the admissible set; otherwise u_nom is
/// projected into U. signals supply one source per channel; the previewed
/// channel's buffer starts from its first p samples and is fed at t + p.
SimTrace simulate(const DelaySystemSpec& spec, const ReducedInvariantResult& result,
                  const Matrix& K, std::vector<DisturbanceSignal>& signals,
                  const AugmentedState& z0, int steps, bool supervised);

/// State-feedback gain (u = -K x) from fixed-point iteration of the discrete
/// Riccati recursion; stops at iters or when successive iterates differ by
/// less than 1e-9. Requires Qw PSD and Rw PD; throws SolverError on divergence.
Matrix make_gain(const LinearSystem& sys, const Matrix& Qw, const Matrix& Rw, int iters = 1000);

std::string trace_to_csv(const SimTrace& trace);
Json trace_to_json(const SimTrace& trace);

}  // namespace invar
