#include "invarkit/system_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "invarkit/json_io.hpp"

namespace invar {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

void require_bounded_nonempty(const HPolytope& p, const std::string& name) {
  if (p.dim == 0) fail(name + " must have positive dimension");
  if (is_empty(p)) fail(name + " is empty");
  auto [lo, hi] = bounding_box(p);
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!std::isfinite(lo(i)) || !std::isfinite(hi(i)))
      fail(name + " is unbounded in axis direction " + std::to_string(i));
}

}  // namespace

void LinearSystem::validate() const {
  const int n = state_dim();
  const int m = input_dim();
  if (n < 1) fail("A must be a nonempty square matrix");
  if (A.cols() != n) fail("A must be square");
  if (B.rows() != n) fail("B row count must match state dimension");
  if (m < 1) fail("B must have at least one column");
  for (std::size_t i = 0; i < dist_channels.size(); ++i) {
    const auto& ch = dist_channels[i];
    const std::string name = "disturbance channel " + std::to_string(i);
    if (ch.F.rows() != n) fail(name + ": F row count must match state dimension");
    if (ch.F.cols() != ch.D.dim) fail(name + ": F column count must match D dimension");
    ch.D.sys.validate();
    require_bounded_nonempty(ch.D, name + " set D");
  }
  if (state_space.dim != n) fail("Q dimension must match state dimension");
  state_space.sys.validate();
  if (input_set.dim != m) fail("U dimension must match input dimension");
  input_set.sys.validate();
  require_bounded_nonempty(input_set, "input set U");
}

void DelaySystemSpec::validate() const {
  base.validate();
  if (tau < 0) fail("tau must be nonnegative");
  if (preview < 0) fail("preview must be nonnegative");
  if (preview > tau) fail("preview exceeds delay: unsupported");
  if (preview > 0) {
    if (!previewed_channel) fail("preview > 0 requires a previewed channel index");
    const int idx = *previewed_channel;
    if (idx < 0 || idx >= static_cast<int>(base.dist_channels.size()))
      fail("previewed channel index out of range");
  } else if (previewed_channel) {
    fail("previewed channel set but preview is 0");
  }
  if (safe_set.dim != base.state_dim()) fail("X dimension must match state dimension");
  safe_set.sys.validate();
  if (base.state_space.sys.normals.rows() > 0 && !contains_set(base.state_space, safe_set))
    fail("X must be contained in Q");
}

int DelaySystemSpec::preview_block_dim() const {
  if (preview == 0) return 0;
  return base.dist_channels[*previewed_channel].D.dim;
}

Vector AugmentedState::flatten() const {
  Eigen::Index total = x.size();
  for (const auto& u : input_history) total += u.size();
  for (const auto& d : preview_window) total += d.size();
  Vector z(total);
  Eigen::Index at = 0;
  z.segment(at, x.size()) = x;
  at += x.size();
  for (const auto& u : input_history) {
    z.segment(at, u.size()) = u;
    at += u.size();
  }
  for (const auto& d : preview_window) {
    z.segment(at, d.size()) = d;
    at += d.size();
  }
  return z;
}

AugmentedState AugmentedState::unflatten(const DelaySystemSpec& spec, const Vector& z) {
  const int n = spec.base.state_dim();
  const int m = spec.base.input_dim();
  const int l = spec.preview_block_dim();
  if (z.size() != n + m * spec.tau + l * spec.preview)
    fail("augmented state has wrong length");
  AugmentedState s;
  s.x = z.head(n);
  Eigen::Index at = n;
  for (int i = 0; i < spec.tau; ++i, at += m) s.input_history.push_back(z.segment(at, m));
  for (int j = 0; j < spec.preview; ++j, at += l) s.preview_window.push_back(z.segment(at, l));
  return s;
}

namespace {

/// Stacks the rows of `part` into `out` at the given coordinate offset.
void embed_rows(Matrix& normals, Vector& offsets, Eigen::Index& row,
                const HPolytope& part, int col_offset) {
  const auto q = part.sys.normals.rows();
  normals.block(row, col_offset, q, part.dim) = part.sys.normals;
  offsets.segment(row, q) = part.sys.offsets;
  row += q;
}

}  // namespace

AugmentedSystem augment(const DelaySystemSpec& spec) {
  spec.validate();
  const int n = spec.base.state_dim();
  const int m = spec.base.input_dim();
  const int tau = spec.tau;
  const int p = spec.preview;
  const int l = spec.preview_block_dim();
  const int N = n + m * tau + l * p;

  AugmentedSystem out;
  out.n = n;
  out.m = m;
  out.l = l;
  out.tau = tau;
  out.p = p;

  Matrix A = Matrix::Zero(N, N);
  A.topLeftCorner(n, n) = spec.base.A;
  if (tau >= 1) {
    A.block(0, n, n, m) = spec.base.B;  // u1 is consumed by the x rows
    for (int i = 1; i < tau; ++i)
      A.block(n + (i - 1) * m, n + i * m, m, m) = Matrix::Identity(m, m);
  }
  if (p >= 1) {
    const int w0 = n + m * tau;
    A.block(0, w0, n, l) = spec.base.dist_channels[*spec.previewed_channel].F;
    for (int j = 1; j < p; ++j)
      A.block(w0 + (j - 1) * l, w0 + j * l, l, l) = Matrix::Identity(l, l);
  }

  Matrix B = Matrix::Zero(N, m);
  if (tau == 0)
    B = spec.base.B;
  else
    B.block(n + (tau - 1) * m, 0, m, m) = Matrix::Identity(m, m);

  std::vector<DisturbanceChannel> channels;
  for (std::size_t i = 0; i < spec.base.dist_channels.size(); ++i) {
    const auto& ch = spec.base.dist_channels[i];
    const bool previewed = p >= 1 && static_cast<int>(i) == *spec.previewed_channel;
    DisturbanceChannel lifted;
    lifted.D = ch.D;
    lifted.F = Matrix::Zero(N, ch.D.dim);
    if (previewed) {
      // The fresh previewed sample lands in the last window slot.
      lifted.F.block(n + m * tau + (p - 1) * l, 0, l, l) = Matrix::Identity(l, l);
    } else {
      lifted.F.topRows(n) = ch.F;
    }
    channels.push_back(std::move(lifted));
  }

  out.sys.A = std::move(A);
  out.sys.B = std::move(B);
  out.sys.dist_channels = std::move(channels);
  out.sys.input_set = spec.base.input_set;

  // Q embeds on the x block; histories and windows are unconstrained by Q.
  {
    const auto& Q = spec.base.state_space;
    HPolytope lifted_q;
    lifted_q.dim = N;
    lifted_q.sys.normals = Matrix::Zero(Q.sys.normals.rows(), N);
    lifted_q.sys.normals.leftCols(n) = Q.sys.normals;
    lifted_q.sys.offsets = Q.sys.offsets;
    out.sys.state_space = std::move(lifted_q);
  }

  // Safe set X x U^tau x D_p^p.
  {
    const auto& X = spec.safe_set;
    const auto& U = spec.base.input_set;
    Eigen::Index rows = X.sys.normals.rows() + tau * U.sys.normals.rows();
    if (p >= 1) rows += p * spec.base.dist_channels[*spec.previewed_channel].D.sys.normals.rows();
    HPolytope S;
    S.dim = N;
    S.sys.normals = Matrix::Zero(rows, N);
    S.sys.offsets = Vector::Zero(rows);
    Eigen::Index row = 0;
    embed_rows(S.sys.normals, S.sys.offsets, row, X, 0);
    for (int i = 0; i < tau; ++i)
      embed_rows(S.sys.normals, S.sys.offsets, row, U, n + i * m);
    if (p >= 1) {
      const auto& D = spec.base.dist_channels[*spec.previewed_channel].D;
      for (int j = 0; j < p; ++j)
        embed_rows(S.sys.normals, S.sys.offsets, row, D, n + m * tau + j * l);
    }
    out.safe_set = std::move(S);
  }

  return out;
}

namespace {

HPolytope polytope_from_spec_json(const Json& j, const char* name) {
  try {
    return polytope_from_json(j);
  } catch (const std::invalid_argument& e) {
    fail(std::string(name) + ": " + e.what());
  }
}

}  // namespace

DelaySystemSpec parse_spec(const std::string& json_text) {
  const Json j = parse_json_text(json_text);
  if (!j.is_object()) fail("spec must be a JSON object");
  for (const char* key : {"A", "B", "channels", "X", "U", "tau"})
    if (!j.contains(key)) fail(std::string("spec is missing \"") + key + "\"");

  DelaySystemSpec spec;
  spec.base.A = matrix_from_json(j.at("A"));
  const int n = static_cast<int>(spec.base.A.rows());
  spec.base.B = matrix_from_json(j.at("B"));
  spec.tau = j.at("tau").get<int>();

  const Json& chans = j.at("channels");
  if (!chans.is_array()) fail("channels must be an array");
  for (std::size_t i = 0; i < chans.size(); ++i) {
    const Json& cj = chans[i];
    DisturbanceChannel ch;
    ch.D = polytope_from_spec_json(cj.at("D"), "channel D");
    ch.F = matrix_from_json(cj.at("F"), ch.D.dim);
    const int pv = cj.value("preview", 0);
    if (pv < 0) fail("channel preview must be nonnegative");
    if (pv > 0) {
      if (spec.previewed_channel) fail("at most one channel may be previewed");
      spec.previewed_channel = static_cast<int>(i);
      spec.preview = pv;
    }
    spec.base.dist_channels.push_back(std::move(ch));
  }

  spec.safe_set = polytope_from_spec_json(j.at("X"), "X");
  spec.base.input_set = polytope_from_spec_json(j.at("U"), "U");
  if (j.contains("Q"))
    spec.base.state_space = polytope_from_spec_json(j.at("Q"), "Q");
  else
    spec.base.state_space = HPolytope::whole_space(n);

  spec.validate();
  return spec;
}

DelaySystemSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

std::string spec_to_json(const DelaySystemSpec& spec) {
  Json j;
  j["A"] = matrix_to_json(spec.base.A);
  j["B"] = matrix_to_json(spec.base.B);
  Json chans = Json::array();
  for (std::size_t i = 0; i < spec.base.dist_channels.size(); ++i) {
    const auto& ch = spec.base.dist_channels[i];
    Json cj;
    cj["F"] = matrix_to_json(ch.F);
    cj["D"] = polytope_to_json(ch.D);
    cj["preview"] =
        (spec.previewed_channel && *spec.previewed_channel == static_cast<int>(i))
            ? spec.preview
            : 0;
    chans.push_back(std::move(cj));
  }
  j["channels"] = std::move(chans);
  j["X"] = polytope_to_json(spec.safe_set);
  j["U"] = polytope_to_json(spec.base.input_set);
  if (spec.base.state_space.sys.normals.rows() > 0)
    j["Q"] = polytope_to_json(spec.base.state_space);
  j["tau"] = spec.tau;
  return dump_json(j);
}

void save_spec(const DelaySystemSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  out << spec_to_json(spec) << '\n';
}

std::string spec_hash(const DelaySystemSpec& spec) {
  return content_hash(spec_to_json(spec));
}

DelayedSimulator::DelayedSimulator(const DelaySystemSpec& spec, Vector x0,
                                   std::vector<Vector> history)
    : spec_(spec), x_(std::move(x0)) {
  if (x_.size() != spec_.base.state_dim()) fail("x0 has wrong dimension");
  if (static_cast<int>(history.size()) != spec_.tau)
    fail("input history must hold exactly tau entries");
  for (auto& u : history) {
    if (u.size() != spec_.base.input_dim()) fail("history entry has wrong dimension");
    pending_.push_back(std::move(u));
  }
}

const Vector& DelayedSimulator::step(const Vector& u,
                                     const std::vector<Vector>& disturbances) {
  if (u.size() != spec_.base.input_dim()) fail("input has wrong dimension");
  if (disturbances.size() != spec_.base.dist_channels.size())
    fail("need one disturbance per channel");
  Vector effective;
  if (spec_.tau == 0) {
    effective = u;
  } else {
    effective = pending_.front();
    pending_.pop_front();
    pending_.push_back(u);
  }
  Vector next = spec_.base.A * x_ + spec_.base.B * effective;
  for (std::size_t i = 0; i < disturbances.size(); ++i) {
    const auto& ch = spec_.base.dist_channels[i];
    if (disturbances[i].size() != ch.D.dim) fail("disturbance has wrong dimension");
    next += ch.F * disturbances[i];
  }
  x_ = std::move(next);
  return x_;
}

}  // namespace invar
