#include "invarkit/delay_reduction.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace invar {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// A^0..A^k by repeated multiplication.
std::vector<Matrix> matrix_powers(const Matrix& A, int k) {
  std::vector<Matrix> powers;
  powers.reserve(k + 1);
  powers.push_back(Matrix::Identity(A.rows(), A.cols()));
  for (int i = 1; i <= k; ++i) powers.push_back(powers.back() * A);
  return powers;
}

int visible_horizon(const DelaySystemSpec& spec, int channel) {
  return (spec.previewed_channel && *spec.previewed_channel == channel) ? spec.preview : 0;
}

/// X shrunk by A^(j-1) F_i D_i for j = 1..upto_i per channel.
HPolytope shrink_by_accrued(const DelaySystemSpec& spec, const std::vector<Matrix>& powers,
                            const std::vector<int>& upto) {
  std::vector<MappedSet> terms;
  for (std::size_t i = 0; i < spec.base.dist_channels.size(); ++i) {
    const auto& ch = spec.base.dist_channels[i];
    for (int j = 1; j <= upto[i]; ++j) terms.push_back({powers[j - 1] * ch.F, ch.D});
  }
  return pontryagin_diff_mapped(spec.safe_set, terms);
}

std::vector<int> horizons_at(const DelaySystemSpec& spec, int k) {
  std::vector<int> upto(spec.base.dist_channels.size());
  for (std::size_t i = 0; i < upto.size(); ++i)
    upto[i] = k - visible_horizon(spec, static_cast<int>(i));
  return upto;
}

HPolytope product_safe_set(const DelaySystemSpec& spec) {
  const int n = spec.base.state_dim();
  const int m = spec.base.input_dim();
  const int l = spec.preview_block_dim();
  const int N = n + m * spec.tau + l * spec.preview;
  const auto& X = spec.safe_set;
  const auto& U = spec.base.input_set;
  Eigen::Index rows = X.sys.normals.rows() + spec.tau * U.sys.normals.rows();
  const HPolytope* D = nullptr;
  if (spec.preview > 0) {
    D = &spec.base.dist_channels[*spec.previewed_channel].D;
    rows += spec.preview * D->sys.normals.rows();
  }
  HPolytope S;
  S.dim = N;
  S.sys.normals = Matrix::Zero(rows, N);
  S.sys.offsets = Vector::Zero(rows);
  Eigen::Index row = 0;
  auto put = [&](const HPolytope& part, int col) {
    const auto q = part.sys.normals.rows();
    S.sys.normals.block(row, col, q, part.dim) = part.sys.normals;
    S.sys.offsets.segment(row, q) = part.sys.offsets;
    row += q;
  };
  put(X, 0);
  for (int i = 0; i < spec.tau; ++i) put(U, n + i * m);
  for (int j = 0; j < spec.preview; ++j) put(*D, n + m * spec.tau + j * l);
  return S;
}

HPolytope stack_all(const std::vector<HPolytope>& parts) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.sys.normals.rows();
  HPolytope out;
  out.dim = parts.front().dim;
  out.sys.normals = Matrix(rows, out.dim);
  out.sys.offsets = Vector(rows);
  Eigen::Index row = 0;
  for (const auto& p : parts) {
    out.sys.normals.middleRows(row, p.sys.normals.rows()) = p.sys.normals;
    out.sys.offsets.segment(row, p.sys.offsets.size()) = p.sys.offsets;
    row += p.sys.normals.rows();
  }
  return out;
}

Matrix prediction_map_cached(const DelaySystemSpec& spec, const std::vector<Matrix>& powers,
                             int k) {
  const int n = spec.base.state_dim();
  const int m = spec.base.input_dim();
  const int l = spec.preview_block_dim();
  const int N = n + m * spec.tau + l * spec.preview;
  Matrix M = Matrix::Zero(n, N);
  M.leftCols(n) = powers[k];
  for (int i = 1; i <= k && i <= spec.tau; ++i)
    M.block(0, n + (i - 1) * m, n, m) = powers[k - i] * spec.base.B;
  if (spec.preview > 0) {
    const Matrix& Fp = spec.base.dist_channels[*spec.previewed_channel].F;
    for (int i = 1; i <= k && i <= spec.preview; ++i)
      M.block(0, n + m * spec.tau + (i - 1) * l, n, l) = powers[k - i] * Fp;
  }
  return M;
}

LinearSystem build_aux_cached(const DelaySystemSpec& spec, const std::vector<Matrix>& powers) {
  LinearSystem aux;
  aux.A = spec.base.A;
  aux.B = spec.base.B;
  aux.state_space = spec.base.state_space;
  aux.input_set = spec.base.input_set;
  for (std::size_t i = 0; i < spec.base.dist_channels.size(); ++i) {
    const auto& ch = spec.base.dist_channels[i];
    DisturbanceChannel reduced;
    reduced.F = powers[spec.tau - visible_horizon(spec, static_cast<int>(i))] * ch.F;
    reduced.D = ch.D;
    aux.dist_channels.push_back(std::move(reduced));
  }
  return aux;
}

HPolytope constraint_k_cached(const DelaySystemSpec& spec, const std::vector<Matrix>& powers,
                              int k) {
  HPolytope target = shrink_by_accrued(spec, powers, horizons_at(spec, k));
  return preimage(target, prediction_map_cached(spec, powers, k));
}

}  // namespace

LinearSystem build_aux(const DelaySystemSpec& spec) {
  return build_aux_cached(spec, matrix_powers(spec.base.A, spec.tau));
}

HPolytope shrunk_safe(const DelaySystemSpec& spec) {
  const auto powers = matrix_powers(spec.base.A, spec.tau);
  return shrink_by_accrued(spec, powers, horizons_at(spec, spec.tau));
}

Matrix prediction_map(const DelaySystemSpec& spec, int k) {
  if (k < 0 || k > spec.tau)
    throw std::invalid_argument("prediction_map: k must lie in 0..tau");
  return prediction_map_cached(spec, matrix_powers(spec.base.A, k), k);
}

HPolytope constraint_k(const DelaySystemSpec& spec, int k) {
  if (k < 0 || k >= spec.tau)
    throw std::invalid_argument("constraint_k: k must lie in 0..tau-1");
  return constraint_k_cached(spec, matrix_powers(spec.base.A, std::max(k, 1)), k);
}

HPolytope constraint_tau(const DelaySystemSpec& spec, const HPolytope& c_hat) {
  if (c_hat.dim != spec.base.state_dim())
    throw std::invalid_argument("constraint_tau: c_hat must live in the state space");
  return preimage(c_hat, prediction_map(spec, spec.tau));
}

ReducedInvariantResult compute(const DelaySystemSpec& spec, const ReduceOptions& opts) {
  spec.validate();
  const auto t_start = Clock::now();
  const auto powers = matrix_powers(spec.base.A, spec.tau);
  ReducedInvariantResult res;

  // Accrued-disturbance supports are shared across the whole constraint
  // family: prefix[c][k] holds, per safe-set row, the offset lost to channel
  // c over horizons 1..k. Each support LP runs once instead of once per k.
  const auto& X = spec.safe_set;
  const auto n_rows = X.rows();
  std::vector<std::vector<Vector>> prefix(spec.base.dist_channels.size());
  auto t0 = Clock::now();
  for (std::size_t c = 0; c < spec.base.dist_channels.size(); ++c) {
    const auto& ch = spec.base.dist_channels[c];
    prefix[c].resize(spec.tau + 1, Vector::Zero(n_rows));
    for (int j = 1; j <= spec.tau; ++j) {
      const Matrix M = powers[j - 1] * ch.F;
      Vector h(n_rows);
      for (Eigen::Index i = 0; i < n_rows; ++i) {
        h(i) = support(ch.D, M.transpose() * X.A().row(i).transpose());
        if (!std::isfinite(h(i)))
          throw std::domain_error("disturbance channel is unbounded in a needed direction");
      }
      prefix[c][j] = prefix[c][j - 1] + h;
    }
  }
  auto target_at = [&](int k) {
    Vector b = X.b();
    for (std::size_t c = 0; c < prefix.size(); ++c) {
      const int upto =
          std::clamp(k - visible_horizon(spec, static_cast<int>(c)), 0, spec.tau);
      b -= prefix[c][upto];
    }
    return HPolytope(X.A(), std::move(b));
  };

  res.aux_system = build_aux_cached(spec, powers);
  res.shrunk_safe_set = target_at(spec.tau);
  res.timings.shrink_ms = ms_since(t0);

  t0 = Clock::now();
  InvariantResult inv = max_invariant_set(res.aux_system, res.shrunk_safe_set, opts.engine);
  res.c_hat = std::move(inv.set);
  res.converged = inv.converged;
  res.maximal = inv.converged;
  res.aux_iterations = inv.iterations;
  res.timings.fixed_point_ms = ms_since(t0);

  t0 = Clock::now();
  for (int k = 0; k < spec.tau; ++k)
    res.constraint_family.push_back(
        preimage(target_at(k), prediction_map_cached(spec, powers, k)));
  res.constraint_family.push_back(
      preimage(res.c_hat, prediction_map_cached(spec, powers, spec.tau)));
  res.constraint_family.push_back(product_safe_set(spec));
  res.c_ext = stack_all(res.constraint_family);
  res.timings.assemble_ms = ms_since(t0);

  const bool canonicalize = opts.canonicalize == Canonicalize::On ||
                            (opts.canonicalize == Canonicalize::Auto && res.c_ext.dim <= 40);
  if (canonicalize) {
    t0 = Clock::now();
    res.c_ext = remove_redundancy(res.c_ext);
    res.canonical = true;
    res.timings.canonicalize_ms = ms_since(t0);
  }
  res.timings.total_ms = ms_since(t_start);
  return res;
}

bool member(const DelaySystemSpec& spec, const ReducedInvariantResult& result,
            const AugmentedState& z, double tol) {
  const Vector zf = z.flatten();
  if (zf.size() != result.c_ext.dim)
    throw std::invalid_argument("member: state has wrong dimension");
  for (const auto& c : result.constraint_family)
    if (!contains_point(c, zf, tol)) return false;
  return true;
}

Json result_to_json(const DelaySystemSpec& spec, const ReducedInvariantResult& result) {
  Json j;
  j["spec_hash"] = spec_hash(spec);
  j["shrunk_safe_set"] = polytope_to_json(result.shrunk_safe_set);
  j["c_hat"] = polytope_to_json(result.c_hat);
  Json family = Json::array();
  for (const auto& c : result.constraint_family) family.push_back(polytope_to_json(c));
  j["constraint_family"] = std::move(family);
  if (result.canonical) j["c_ext"] = polytope_to_json(result.c_ext);
  j["flags"] = {{"converged", result.converged},
                {"maximal", result.maximal},
                {"canonical", result.canonical}};
  j["aux_iterations"] = result.aux_iterations;
  j["timings"] = {{"shrink_ms", result.timings.shrink_ms},
                  {"fixed_point_ms", result.timings.fixed_point_ms},
                  {"assemble_ms", result.timings.assemble_ms},
                  {"canonicalize_ms", result.timings.canonicalize_ms},
                  {"total_ms", result.timings.total_ms}};
  return j;
}

}  // namespace invar
