#include "invarkit/supervisor.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Eigenvalues>

#include "invarkit/lp.hpp"

namespace invar {

DisturbanceSignal DisturbanceSignal::constant(Vector value) {
  DisturbanceSignal s;
  s.kind_ = Kind::Constant;
  s.value_ = std::move(value);
  return s;
}

DisturbanceSignal DisturbanceSignal::sine(Vector amplitude, double period, double phase) {
  if (period <= 0) throw std::invalid_argument("sine period must be positive");
  DisturbanceSignal s;
  s.kind_ = Kind::Sine;
  s.amplitude_ = std::move(amplitude);
  s.period_ = period;
  s.phase_ = phase;
  return s;
}

DisturbanceSignal DisturbanceSignal::uniform_random(std::uint64_t seed) {
  DisturbanceSignal s;
  s.kind_ = Kind::UniformRandom;
  s.seed_ = seed;
  s.rng_state_ = seed ? seed : 0x9e3779b97f4a7c15ull;
  return s;
}

DisturbanceSignal DisturbanceSignal::replay(std::vector<Vector> samples) {
  if (samples.empty()) throw std::invalid_argument("replay signal needs at least one sample");
  DisturbanceSignal s;
  s.kind_ = Kind::Replay;
  s.replay_ = std::move(samples);
  return s;
}

double DisturbanceSignal::next_unit() {
  // splitmix64 step; top 53 bits to [0,1).
  rng_state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = rng_state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

Vector DisturbanceSignal::raw_sample(int t) {
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::Sine: {
      constexpr double two_pi = 6.28318530717958647692;
      Vector v(amplitude_.size());
      const double arg = two_pi * static_cast<double>(t) / period_ + phase_;
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = amplitude_(i) * std::sin(arg);
      return v;
    }
    case Kind::UniformRandom: {
      Vector v(box_lo_.size());
      for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = box_lo_(i) + next_unit() * (box_hi_(i) - box_lo_(i));
      return v;
    }
    case Kind::Replay: {
      const auto idx = std::min<std::size_t>(t, replay_.size() - 1);
      return replay_[idx];
    }
  }
  throw std::logic_error("unreachable signal kind");
}

const Vector& DisturbanceSignal::sample(const HPolytope& D, int t) {
  if (t < 0) throw std::invalid_argument("signal time must be nonnegative");
  if (!box_ready_) {
    std::tie(box_lo_, box_hi_) = bounding_box(D);
    box_ready_ = true;
  }
  while (static_cast<int>(cache_.size()) <= t) {
    Vector v = raw_sample(static_cast<int>(cache_.size()));
    if (v.size() != D.dim)
      throw std::invalid_argument("signal value dimension does not match the channel");
    bool clamped = false;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double c = std::min(std::max(v(i), box_lo_(i)), box_hi_(i));
      if (c != v(i)) clamped = true;
      v(i) = c;
    }
    if (clamped) ++clamp_events_;
    cache_.push_back(std::move(v));
  }
  return cache_[t];
}

namespace {

/// c_hat shrunk by the reduced system's disturbance channels; the one-step
/// robust target for the prediction.
HPolytope aux_target(const ReducedInvariantResult& result) {
  std::vector<MappedSet> terms;
  for (const auto& ch : result.aux_system.dist_channels) terms.push_back({ch.F, ch.D});
  return pontryagin_diff_mapped(result.c_hat, terms);
}

/// {u in U : A x_hat + B u in target}.
HPolytope admissible_from_target(const LinearSystem& aux, const HPolytope& target,
                                 const Vector& x_hat) {
  const int m = aux.input_dim();
  HPolytope lifted;
  lifted.dim = m;
  lifted.sys.normals = target.sys.normals * aux.B;
  lifted.sys.offsets = target.sys.offsets - target.sys.normals * (aux.A * x_hat);
  HPolytope out = intersect(normalize_rows(lifted), aux.input_set, false);
  return out;
}

}  // namespace

HPolytope admissible_inputs(const DelaySystemSpec& spec, const ReducedInvariantResult& result,
                            const AugmentedState& z) {
  if (!member(spec, result, z))
    throw std::domain_error("admissible_inputs: state is outside the invariant set");
  const Vector x_hat = prediction_map(spec, spec.tau) * z.flatten();
  return admissible_from_target(result.aux_system, aux_target(result), x_hat);
}

Vector project_input(const Vector& u_nom, const HPolytope& admissible) {
  if (u_nom.size() != admissible.dim)
    throw std::invalid_argument("project_input: dimension mismatch");
  if (contains_point(admissible, u_nom)) return u_nom;
  const int m = admissible.dim;
  const auto q = admissible.sys.normals.rows();

  // Phase A: minimize the max coordinate deviation r over (u, r).
  HalfspaceSystem cheb;
  cheb.normals = Matrix::Zero(q + 2 * m, m + 1);
  cheb.offsets = Vector::Zero(q + 2 * m);
  cheb.normals.topLeftCorner(q, m) = admissible.sys.normals;
  cheb.offsets.head(q) = admissible.sys.offsets;
  for (int i = 0; i < m; ++i) {
    cheb.normals(q + 2 * i, i) = 1;
    cheb.normals(q + 2 * i, m) = -1;
    cheb.offsets(q + 2 * i) = u_nom(i);
    cheb.normals(q + 2 * i + 1, i) = -1;
    cheb.normals(q + 2 * i + 1, m) = -1;
    cheb.offsets(q + 2 * i + 1) = -u_nom(i);
  }
  Vector obj = Vector::Zero(m + 1);
  obj(m) = -1;
  LpResult phase_a = solve_max(obj, cheb);
  if (phase_a.status != LpStatus::Optimal)
    throw SolverError("project_input: admissible set is empty");
  const double radius = phase_a.optimizer(m);

  // Phase B: within that radius, minimize the total coordinate deviation so
  // coordinates that need not move stay at u_nom. Variables (u, s_1..s_m).
  HalfspaceSystem tie;
  tie.normals = Matrix::Zero(q + 3 * m, 2 * m);
  tie.offsets = Vector::Zero(q + 3 * m);
  tie.normals.topLeftCorner(q, m) = admissible.sys.normals;
  tie.offsets.head(q) = admissible.sys.offsets;
  for (int i = 0; i < m; ++i) {
    tie.normals(q + 3 * i, i) = 1;
    tie.normals(q + 3 * i, m + i) = -1;
    tie.offsets(q + 3 * i) = u_nom(i);
    tie.normals(q + 3 * i + 1, i) = -1;
    tie.normals(q + 3 * i + 1, m + i) = -1;
    tie.offsets(q + 3 * i + 1) = -u_nom(i);
    tie.normals(q + 3 * i + 2, m + i) = 1;
    tie.offsets(q + 3 * i + 2) = radius + 1e-9;
  }
  Vector tie_obj = Vector::Zero(2 * m);
  tie_obj.tail(m).setConstant(-1);
  LpResult phase_b = solve_max(tie_obj, tie);
  if (phase_b.status != LpStatus::Optimal)
    throw SolverError("project_input: tie-break stage failed");
  return phase_b.optimizer.head(m);
}

SimTrace simulate(const DelaySystemSpec& spec, const ReducedInvariantResult& result,
                  const Matrix& K, std::vector<DisturbanceSignal>& signals,
                  const AugmentedState& z0, int steps, bool supervised) {
  spec.validate();
  const int n = spec.base.state_dim();
  const int m = spec.base.input_dim();
  const int N = n + m * spec.tau + spec.preview_block_dim() * spec.preview;
  if (signals.size() != spec.base.dist_channels.size())
    throw std::invalid_argument("simulate: need one signal per channel");
  if (K.size() > 0 && (K.rows() != m || K.cols() != N))
    throw std::invalid_argument("simulate: gain must map the product state to inputs");
  const Matrix predictor = prediction_map(spec, spec.tau);
  const HPolytope target = supervised ? aux_target(result) : HPolytope{};

  AugmentedState z = z0;
  if (z.x.size() != n || static_cast<int>(z.input_history.size()) != spec.tau ||
      static_cast<int>(z.preview_window.size()) != spec.preview)
    throw std::invalid_argument("simulate: z0 has wrong shape");

  // The window must agree with the signal's opening samples.
  if (spec.preview > 0) {
    const int pch = *spec.previewed_channel;
    const auto& D = spec.base.dist_channels[pch].D;
    for (int j = 0; j < spec.preview; ++j) z.preview_window[j] = signals[pch].sample(D, j);
  }

  SimTrace trace;
  trace.records.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.x = z.x;
    const Vector zf = z.flatten();
    rec.x_hat = predictor * zf;
    rec.safe = contains_point(spec.safe_set, z.x);
    rec.u_nominal = K.size() > 0 ? Vector(-K * zf) : Vector(Vector::Zero(m));

    if (supervised && member(spec, result, z)) {
      HPolytope adm = admissible_from_target(result.aux_system, target, rec.x_hat);
      if (is_empty(adm)) {
        rec.admissible_empty = true;
        rec.u_applied = project_input(rec.u_nominal, spec.base.input_set);
      } else {
        rec.u_applied = project_input(rec.u_nominal, adm);
      }
    } else {
      rec.u_applied = project_input(rec.u_nominal, spec.base.input_set);
    }

    // Disturbances consumed at t: the previewed channel eats its window head.
    rec.disturbances.resize(spec.base.dist_channels.size());
    for (std::size_t i = 0; i < spec.base.dist_channels.size(); ++i) {
      const bool previewed =
          spec.preview > 0 && static_cast<int>(i) == *spec.previewed_channel;
      rec.disturbances[i] =
          previewed ? z.preview_window[0]
                    : signals[i].sample(spec.base.dist_channels[i].D, t);
    }

    Vector u_effective = spec.tau == 0 ? rec.u_applied : z.input_history[0];
    Vector x_next = spec.base.A * z.x + spec.base.B * u_effective;
    for (std::size_t i = 0; i < spec.base.dist_channels.size(); ++i)
      x_next += spec.base.dist_channels[i].F * rec.disturbances[i];

    if (spec.tau > 0) {
      z.input_history.erase(z.input_history.begin());
      z.input_history.push_back(rec.u_applied);
    }
    if (spec.preview > 0) {
      const int pch = *spec.previewed_channel;
      const auto& D = spec.base.dist_channels[pch].D;
      z.preview_window.erase(z.preview_window.begin());
      z.preview_window.push_back(signals[pch].sample(D, t + spec.preview));
    }
    z.x = std::move(x_next);

    if (!rec.safe && !trace.first_violation) trace.first_violation = t;
    trace.records.push_back(std::move(rec));
  }
  trace.final_state = z.x;
  trace.final_safe = contains_point(spec.safe_set, z.x);
  if (!trace.final_safe && !trace.first_violation)
    trace.first_violation = static_cast<int>(trace.records.size());
  return trace;
}

Matrix make_gain(const LinearSystem& sys, const Matrix& Qw, const Matrix& Rw, int iters) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (Qw.rows() != n || Qw.cols() != n) throw std::invalid_argument("Qw must be n x n");
  if (Rw.rows() != m || Rw.cols() != m) throw std::invalid_argument("Rw must be m x m");

  Eigen::SelfAdjointEigenSolver<Matrix> eq(0.5 * (Qw + Qw.transpose()));
  if (eq.eigenvalues().minCoeff() < -1e-9)
    throw std::invalid_argument("Qw must be positive semidefinite");
  Eigen::SelfAdjointEigenSolver<Matrix> er(0.5 * (Rw + Rw.transpose()));
  if (er.eigenvalues().minCoeff() <= 1e-9)
    throw std::invalid_argument("Rw must be positive definite");

  Matrix P = Qw;
  for (int it = 0; it < iters; ++it) {
    const Matrix BtP = sys.B.transpose() * P;
    const Matrix gain_den = Rw + BtP * sys.B;
    const Matrix K = gain_den.ldlt().solve(BtP * sys.A);
    const Matrix P_next =
        Qw + sys.A.transpose() * P * sys.A - sys.A.transpose() * P * sys.B * K;
    const double delta = (P_next - P).cwiseAbs().maxCoeff();
    P = P_next;
    if (!P.allFinite() || P.cwiseAbs().maxCoeff() > 1e12)
      throw SolverError("make_gain: Riccati iteration diverged (system may be uncontrollable)");
    if (delta < 1e-9) break;
  }
  const Matrix BtP = sys.B.transpose() * P;
  return (Rw + BtP * sys.B).ldlt().solve(BtP * sys.A);
}

namespace {

void append_csv_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

}  // namespace

std::string trace_to_csv(const SimTrace& trace) {
  std::string out;
  if (trace.records.empty()) return out;
  const auto& first = trace.records.front();
  out += "t";
  for (Eigen::Index i = 0; i < first.x.size(); ++i) out += ",x" + std::to_string(i);
  for (Eigen::Index i = 0; i < first.u_nominal.size(); ++i) out += ",u_nom" + std::to_string(i);
  for (Eigen::Index i = 0; i < first.u_applied.size(); ++i) out += ",u_app" + std::to_string(i);
  for (std::size_t c = 0; c < first.disturbances.size(); ++c)
    for (Eigen::Index i = 0; i < first.disturbances[c].size(); ++i)
      out += ",d" + std::to_string(c) + "_" + std::to_string(i);
  for (Eigen::Index i = 0; i < first.x_hat.size(); ++i) out += ",xhat" + std::to_string(i);
  out += ",safe,admissible_empty\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.t);
    auto put = [&out](const Vector& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        out += ',';
        append_csv_number(out, v(i));
      }
    };
    put(r.x);
    put(r.u_nominal);
    put(r.u_applied);
    for (const auto& d : r.disturbances) put(d);
    put(r.x_hat);
    out += r.safe ? ",1" : ",0";
    out += r.admissible_empty ? ",1\n" : ",0\n";
  }
  return out;
}

Json trace_to_json(const SimTrace& trace) {
  Json steps = Json::array();
  for (const auto& r : trace.records) {
    Json rec;
    rec["t"] = r.t;
    rec["x"] = vector_to_json(r.x);
    rec["u_nominal"] = vector_to_json(r.u_nominal);
    rec["u_applied"] = vector_to_json(r.u_applied);
    Json ds = Json::array();
    for (const auto& d : r.disturbances) ds.push_back(vector_to_json(d));
    rec["disturbances"] = std::move(ds);
    rec["x_hat"] = vector_to_json(r.x_hat);
    rec["safe"] = r.safe;
    rec["admissible_empty"] = r.admissible_empty;
    steps.push_back(std::move(rec));
  }
  Json j;
  j["records"] = std::move(steps);
  j["final_state"] = vector_to_json(trace.final_state);
  j["final_safe"] = trace.final_safe;
  if (trace.first_violation) j["first_violation"] = *trace.first_violation;
  return j;
}

}  // namespace invar
