// Acceptance gate. Six end-to-end criteria, one PASS/FAIL line each; the
// process exits nonzero when any of them fails. Every expected value here is
// derived independently of the code under test: closed-form recursions for
// the 1-D plant, brute-force vertex and grid oracles for the set operations,
// and the full product-space computation as the cross-check for the reduced
// pipeline.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "invarkit/delay_reduction.hpp"
#include "invarkit/invariance.hpp"
#include "invarkit/json_io.hpp"
#include "invarkit/polytope.hpp"
#include "invarkit/supervisor.hpp"
#include "invarkit/system_model.hpp"
#include "oracles.hpp"

namespace {

using namespace invar;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_work;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

HPolytope interval(double lo, double hi) {
  return HPolytope::box(Vector::Constant(1, lo), Vector::Constant(1, hi));
}

/// 1-D benchmark plant: barely stabilizable under long delays, which is what
/// makes its emptiness pattern over (tau, preview) discriminating.
DelaySystemSpec toy(int tau, int preview) {
  DelaySystemSpec spec;
  spec.base.A = Matrix::Constant(1, 1, 1.5);
  spec.base.B = Matrix::Constant(1, 1, 1.0);
  spec.base.dist_channels.push_back({Matrix::Identity(1, 1), interval(-2, 2)});
  spec.base.state_space = HPolytope::whole_space(1);
  spec.base.input_set = interval(-20, 20);
  spec.safe_set = interval(-32, 32);
  spec.tau = tau;
  spec.preview = preview;
  if (preview > 0) spec.previewed_channel = 0;
  spec.validate();
  return spec;
}

/// Random bounded polytope: a centered box plus a few cuts that keep a known
/// interior point feasible.
HPolytope random_polytope(oracle::Rng& rng, int n, double r, int extra) {
  Vector x0(n);
  for (int i = 0; i < n; ++i) x0(i) = rng.range(-0.3 * r, 0.3 * r);
  Matrix a(2 * n + extra, n);
  Vector b(2 * n + extra);
  a.setZero();
  for (int i = 0; i < n; ++i) {
    a(2 * i, i) = 1;
    b(2 * i) = r;
    a(2 * i + 1, i) = -1;
    b(2 * i + 1) = r;
  }
  for (int e = 0; e < extra; ++e) {
    Vector dir(n);
    for (int i = 0; i < n; ++i) dir(i) = rng.range(-1.0, 1.0);
    if (dir.norm() < 1e-3) dir(0) = 1.0;
    a.row(2 * n + e) = dir;
    b(2 * n + e) = dir.dot(x0) + rng.range(0.05 * r, r);
  }
  return HPolytope(a, b);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(INVARKIT_CLI_PATH) + " " + args + " > " +
                          (g_work / "cli_stdout.txt").string() + " 2> " +
                          (g_work / "cli_stderr.txt").string();
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

/// Start state whose preview window matches what the signal will actually
/// deliver: the window coordinates are pinned to the first samples and the
/// remaining coordinates are centered in the compatible slice.
AugmentedState centered_start(const DelaySystemSpec& spec, const ReducedInvariantResult& res,
                              std::vector<DisturbanceSignal>& signals) {
  const int n = spec.base.state_dim();
  const int m = spec.base.input_dim();
  const int N = n + m * spec.tau + spec.preview_block_dim() * spec.preview;
  std::vector<std::pair<int, double>> fixes;
  if (spec.preview > 0) {
    const int lp = spec.preview_block_dim();
    const HPolytope& D = spec.base.dist_channels[*spec.previewed_channel].D;
    for (int j = 0; j < spec.preview; ++j) {
      const Vector& w = signals[*spec.previewed_channel].sample(D, j);
      for (int i = 0; i < lp; ++i) fixes.emplace_back(n + m * spec.tau + j * lp + i, w(i));
    }
  }
  HPolytope given = fixes.empty() ? res.c_ext : slice(res.c_ext, fixes);
  if (is_empty(given)) throw std::runtime_error("no start state is compatible with the sampled window");
  const auto [center, radius] = chebyshev_center(given);
  (void)radius;
  Vector flat(N);
  flat.head(n + m * spec.tau) = center.head(n + m * spec.tau);
  for (const auto& [idx, val] : fixes) flat(idx) = val;
  return AugmentedState::unflatten(spec, flat);
}

// Criterion 1: the reduced pipeline and the full product-space fixed point
// agree through the CLI, on the 1-D plant and on random small systems.
Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  oracle::Rng rng(240817);
  int compared = 0, skipped = 0;
  for (int case_i = 0; case_i <= 20; ++case_i) {
    DelaySystemSpec spec;
    if (case_i == 0) {
      spec = toy(1, 0);
    } else {
      const int n = rng.integer(1, 2);
      const int tau = rng.integer(1, 2);
      const int p = rng.integer(0, 1) == 0 ? 0 : rng.integer(0, tau);
      spec = oracle::random_spec(rng, n, 1, tau, p);
    }
    const std::string tag = std::to_string(case_i);
    const fs::path spec_path = g_work / ("c1_spec_" + tag + ".json");
    const fs::path red_path = g_work / ("c1_reduced_" + tag + ".json");
    const fs::path dir_path = g_work / ("c1_direct_" + tag + ".json");
    save_spec(spec, spec_path.string());
    if (run_cli("compute " + spec_path.string() + " --out " + red_path.string() +
                " --max-iter 150") != 0)
      return {false, "compute exited nonzero on case " + tag};
    if (run_cli("direct " + spec_path.string() + " --out " + dir_path.string() +
                " --max-iter 150") != 0)
      return {false, "direct exited nonzero on case " + tag};
    const Json rj = load_json(red_path.string());
    const Json dj = load_json(dir_path.string());
    if (!rj.at("flags").at("converged").get<bool>() || !dj.at("converged").get<bool>()) {
      if (case_i == 0) return {false, "the 1-D delayed instance must converge on both paths"};
      ++skipped;
      continue;
    }
    if (!rj.contains("c_ext")) return {false, "bundle lacks the canonical set on case " + tag};
    const HPolytope reduced = polytope_from_json(rj.at("c_ext"));
    const HPolytope direct = polytope_from_json(dj.at("set"));
    if (!set_equal(reduced, direct, 1e-5))
      return {false, "reduced and direct sets differ on case " + tag};
    ++compared;
  }
  if (compared < 12)
    return {false, fmt("only %d of 21 pairs converged; too few for a meaningful check", compared)};
  return {true, fmt("%d/21 pairs equal at 1e-5 (%d skipped as non-convergent), %.1f s", compared,
                    skipped, seconds_since(t0))};
}

// Criterion 2: exact emptiness pattern over the delay/preview grid. With the
// window shortened to tau - p = 4 visible steps the shrunk box keeps halfwidth
// 32 - 4*(1.5^4 - 1) > 0, at 5 visible steps it does not survive the
// amplified disturbance, so the pattern flips along the tau - p = 5 diagonal.
Outcome criterion2() {
  struct Row {
    int tau, p;
    bool nonempty;
  };
  const Row rows[] = {{1, 0, true},   {5, 1, true},   {10, 6, true},
                      {15, 11, true}, {20, 16, true}, {5, 0, false},
                      {10, 5, false}, {15, 10, false}, {20, 15, false}};
  ReduceOptions opts;
  opts.canonicalize = Canonicalize::Off;
  for (const Row& row : rows) {
    const ReducedInvariantResult res = compute(toy(row.tau, row.p), opts);
    if (!res.converged) return {false, fmt("(tau=%d, p=%d) did not converge", row.tau, row.p)};
    const bool nonempty = !is_empty(res.c_ext);
    if (nonempty != row.nonempty)
      return {false, fmt("(tau=%d, p=%d) expected %s, got %s", row.tau, row.p,
                         row.nonempty ? "nonempty" : "empty", nonempty ? "nonempty" : "empty")};
  }
  return {true, "all 9 delay/preview pairs match the expected emptiness pattern"};
}

// Criterion 3: scaling shape, ordering only. The reduced pipeline must not
// blow up with the delay (tau=20 under 20x the tau=1 time) and must beat the
// product-space computation at tau=10 by more than 10x.
Outcome criterion3() {
  ReduceOptions opts;
  opts.canonicalize = Canonicalize::Off;
  auto best_reduced_ms = [&](int tau, int p) {
    const DelaySystemSpec spec = toy(tau, p);
    (void)compute(spec, opts);  // warm-up run outside the timing
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const ReducedInvariantResult res = compute(spec, opts);
      const double ms = 1e3 * seconds_since(t0);
      if (!res.converged) return -1.0;
      best = std::min(best, ms);
    }
    return best;
  };
  const double r1 = best_reduced_ms(1, 0);
  const double r10 = best_reduced_ms(10, 6);
  const double r20 = best_reduced_ms(20, 16);
  if (r1 <= 0 || r10 <= 0 || r20 <= 0) return {false, "a reduced run failed to converge"};

  const DelaySystemSpec spec10 = toy(10, 6);
  const AugmentedSystem aug = augment(spec10);
  const auto t0 = std::chrono::steady_clock::now();
  const InvariantResult direct = max_invariant_set(aug.sys, aug.safe_set, {});
  const double d10 = 1e3 * seconds_since(t0);

  const bool growth_ok = r20 < 20.0 * r1;
  const bool direct_ok = d10 > 10.0 * r10;
  Outcome out;
  out.pass = growth_ok && direct_ok;
  out.detail = fmt(
      "reduced (20,16) %.3f ms vs (1,0) %.3f ms, ratio %.1f (bound 20); "
      "direct (10,6) %.1f ms%s vs reduced %.3f ms, ratio %.0f (bound 10)",
      r20, r1, r20 / r1, d10, direct.converged ? "" : " [hit iteration cap]", r10, d10 / r10);
  return out;
}

// Criterion 4: every converged set re-checks as invariant, descent is
// monotone, and the two workhorse polytope operations agree with brute-force
// oracles on 200 random instances.
Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  oracle::Rng rng(7041);

  int fixed_converged = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const DelaySystemSpec spec =
        oracle::random_spec(rng, rng.integer(1, 2), rng.integer(1, 2), 0, 0);
    const AugmentedSystem aug = augment(spec);
    InvariantOptions io;
    io.max_iter = 80;
    io.check_monotone = true;
    const InvariantResult res = max_invariant_set(aug.sys, aug.safe_set, io);
    if (!res.monotone)
      return {false, "descent broke monotonicity on a random delay-free instance"};
    if (res.converged) {
      ++fixed_converged;
      if (!is_invariant(aug.sys, res.set, aug.safe_set))
        return {false, "a converged fixed point failed the invariance re-check"};
    }
  }

  // Reduced fixed points with the monotonicity probe on, then the assembled
  // product sets re-checked as invariant sets of the full system.
  for (const auto& [tau, p] : {std::pair{1, 0}, std::pair{5, 1}, std::pair{10, 6}}) {
    const DelaySystemSpec spec = toy(tau, p);
    InvariantOptions io;
    io.check_monotone = true;
    const InvariantResult res = max_invariant_set(build_aux(spec), shrunk_safe(spec), io);
    if (!res.converged || !res.monotone)
      return {false, fmt("reduced fixed point at (tau=%d, p=%d) lost monotone descent", tau, p)};
  }
  int assembled = 0;
  std::vector<DelaySystemSpec> specs = {toy(1, 0), toy(5, 1), toy(10, 6)};
  for (int trial = 0; trial < 6; ++trial) {
    const int tau = rng.integer(1, 2);
    specs.push_back(oracle::random_spec(rng, rng.integer(1, 2), 1, tau, rng.integer(0, tau)));
  }
  ReduceOptions ro;
  ro.canonicalize = Canonicalize::Off;
  ro.engine.max_iter = 80;
  for (const auto& spec : specs) {
    const ReducedInvariantResult res = compute(spec, ro);
    if (!res.converged) continue;
    const AugmentedSystem aug = augment(spec);
    if (!is_invariant(aug.sys, res.c_ext, aug.safe_set))
      return {false, "an assembled product set failed the invariance re-check"};
    ++assembled;
  }
  if (assembled < 5) return {false, "too few assembled sets converged for the invariance sweep"};

  // Shrink oracle: points of the shrunk set survive every mapped vertex shift.
  int shrink_instances = 0, shrink_points = 0, attempts = 0;
  while (shrink_instances < 100 && attempts < 500) {
    ++attempts;
    const int n = rng.integer(1, 3);
    const double r = rng.range(0.5, 3.0);
    const HPolytope P = random_polytope(rng, n, r, rng.integer(0, 3));
    std::vector<MappedSet> terms;
    const int n_terms = rng.integer(1, 2);
    for (int t = 0; t < n_terms; ++t) {
      const int l = rng.integer(1, 2);
      Matrix m(n, l);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < l; ++j) m(i, j) = rng.range(-0.4, 0.4);
      Vector dlo(l), dhi(l);
      for (int j = 0; j < l; ++j) {
        dlo(j) = rng.range(-0.5 * r, 0.0);
        dhi(j) = rng.range(0.0, 0.5 * r);
      }
      terms.push_back({m, HPolytope::box(dlo, dhi)});
    }
    const HPolytope diff = pontryagin_diff_mapped(P, terms);
    if (is_empty(diff)) continue;
    ++shrink_instances;
    const auto [lo, hi] = bounding_box(diff);
    std::vector<std::vector<Vector>> verts;
    for (const auto& t : terms) verts.push_back(oracle::enumerate_vertices(t.set));
    int found = 0;
    for (int s = 0; s < 30 && found < 5; ++s) {
      Vector x(n);
      for (int i = 0; i < n; ++i) x(i) = rng.range(lo(i), hi(i));
      if (!contains_point(diff, x, 1e-9)) continue;
      ++found;
      ++shrink_points;
      std::vector<std::size_t> pick(terms.size(), 0);
      while (true) {
        Vector shifted = x;
        for (std::size_t i = 0; i < terms.size(); ++i) shifted += terms[i].map * verts[i][pick[i]];
        if (!contains_point(P, shifted, 1e-6))
          return {false, "a point of a shrunk set escaped under a mapped vertex shift"};
        std::size_t at = 0;
        while (at < pick.size() && ++pick[at] == verts[at].size()) pick[at++] = 0;
        if (at == pick.size()) break;
      }
    }
  }
  if (shrink_instances < 100 || shrink_points < 200)
    return {false, "could not assemble 100 nonempty shrink instances"};

  // Projection oracle: membership in the eliminated set must match fiber
  // feasibility of the original, away from a thin boundary band.
  for (int trial = 0; trial < 100; ++trial) {
    const HPolytope P = random_polytope(rng, 2, rng.range(0.5, 3.0), rng.integer(0, 4));
    const int drop = rng.integer(0, 1);
    const int keep = 1 - drop;
    const HPolytope proj = eliminate(P, {drop});
    if (is_empty(proj)) return {false, "projection of a nonempty set came out empty"};
    const auto [lo, hi] = bounding_box(proj);
    const double a = lo(0), b = hi(0);
    for (int g = 0; g <= 100; ++g) {
      const double x = a - 0.2 + g * (b - a + 0.4) / 100.0;
      if (std::abs(x - a) < 2e-3 || std::abs(x - b) < 2e-3) continue;
      const bool lifted = !is_empty(slice(P, {{keep, x}}));
      if (contains_point(proj, Vector::Constant(1, x), 1e-9) != lifted)
        return {false, "projection membership disagreed with the lifted feasibility oracle"};
    }
  }

  return {true, fmt("10 random fixed points (%d converged), %d assembled sets re-checked, "
                    "100 shrink + 100 projection oracle instances, %.0f s",
                    fixed_converged, assembled, seconds_since(t0))};
}

// Criterion 5: states outside the computed delay-free set are doomed. The
// stock plant keeps the whole box, so the excluded sweep is vacuous there; a
// low-authority variant (U shrunk to [-1,1]) empties the set and makes the
// game-tree oracle prove every grid point escapable.
Outcome criterion5() {
  const Vector lo = Vector::Constant(1, -52.0);
  const Vector hi = Vector::Constant(1, 52.0);

  const DelaySystemSpec lit = toy(0, 0);
  const AugmentedSystem laug = augment(lit);
  const InvariantResult lres = max_invariant_set(laug.sys, laug.safe_set, {});
  if (!lres.converged) return {false, "the delay-free run did not converge"};
  int excluded = 0;
  {
    oracle::EscapeOracle esc(laug.sys, lit.safe_set, lo, hi, 0.002, 9);
    for (int g = 0; g <= 6400; ++g) {
      const double x = -32.0 + 0.01 * g;
      if (contains_point(lres.set, Vector::Constant(1, x), 1e-6)) continue;
      ++excluded;
      if (!esc.escapes(Vector::Constant(1, x), lres.iterations + 1))
        return {false, fmt("excluded state x=%.2f not forced out within %d steps", x,
                           lres.iterations + 1)};
    }
  }

  DelaySystemSpec weak = toy(0, 0);
  weak.base.input_set = interval(-1, 1);
  const AugmentedSystem waug = augment(weak);
  const InvariantResult wres = max_invariant_set(waug.sys, waug.safe_set, {});
  if (!wres.converged || !is_empty(wres.set))
    return {false, "the low-authority variant should settle on the empty set"};
  const int depth = wres.iterations + 1;
  if (depth >= 60) return {false, "iteration count too large for the oracle's memo packing"};
  oracle::EscapeOracle esc(waug.sys, weak.safe_set, lo, hi, 0.002, 9);
  for (int g = 0; g <= 6400; ++g) {
    const double x = -32.0 + 0.01 * g;
    if (!esc.escapes(Vector::Constant(1, x), depth))
      return {false, fmt("x=%.2f survived %d steps against the gridded opponent", x, depth)};
  }
  return {true, fmt("stock plant keeps the whole box (%d excluded points, sweep vacuous); "
                    "low-authority variant empty after %d rounds, all 6401 grid points "
                    "forced out within %d steps",
                    excluded, wres.iterations, depth)};
}

// Criterion 6: supervised closed-loop runs from a compatible start state stay
// safe for 200 steps with a zero nominal controller, on every nonempty
// delay/preview row and on the shipped lane-keeping configuration.
Outcome criterion6() {
  struct Row {
    int tau, p;
  };
  const Row rows[] = {{1, 0}, {5, 1}, {10, 6}, {15, 11}, {20, 16}};
  ReduceOptions ro;
  ro.canonicalize = Canonicalize::Off;
  long total_steps = 0;
  auto run_case = [&](const DelaySystemSpec& spec, const ReducedInvariantResult& res,
                      std::uint64_t seed, std::string* err) {
    std::vector<DisturbanceSignal> signals;
    for (std::size_t c = 0; c < spec.base.dist_channels.size(); ++c)
      signals.push_back(DisturbanceSignal::uniform_random(seed + c));
    const AugmentedState z0 = centered_start(spec, res, signals);
    const SimTrace trace = simulate(spec, res, Matrix(0, 0), signals, z0, 200, true);
    for (const auto& rec : trace.records) {
      if (!rec.safe) {
        *err = fmt("safety violated at step %d", rec.t);
        return false;
      }
      if (rec.admissible_empty) {
        *err = fmt("admissible set empty at step %d", rec.t);
        return false;
      }
    }
    if (!trace.final_safe) {
      *err = "final state left the safe set";
      return false;
    }
    total_steps += static_cast<long>(trace.records.size());
    return true;
  };

  for (const Row& row : rows) {
    const DelaySystemSpec spec = toy(row.tau, row.p);
    const ReducedInvariantResult res = compute(spec, ro);
    if (!res.converged || is_empty(res.c_ext))
      return {false, fmt("(tau=%d, p=%d) should be a nonempty row", row.tau, row.p)};
    std::string err;
    if (!run_case(spec, res, 9000 + static_cast<std::uint64_t>(row.tau), &err))
      return {false, fmt("(tau=%d, p=%d): %s", row.tau, row.p, err.c_str())};
  }

  const DelaySystemSpec lane = load_spec(std::string(INVARKIT_CONFIG_DIR) + "/lane_keeping.json");
  const ReducedInvariantResult lres = compute(lane, ro);
  if (!lres.converged) return {false, "lane-keeping fixed point did not converge"};
  std::string lane_note;
  if (is_empty(lres.c_ext)) {
    lane_note = "lane-keeping set empty at shipped parameters, property vacuous";
  } else {
    std::string err;
    if (!run_case(lane, lres, 4242, &err)) return {false, "lane-keeping: " + err};
    lane_note = "lane-keeping set nonempty and its 200-step supervised run stayed safe";
  }
  return {true, fmt("%ld supervised steps across 5 delay/preview rows, zero violations, "
                    "zero empty admissible sets; %s",
                    total_steps, lane_note.c_str())};
}

}  // namespace

int main() {
  g_work = fs::temp_directory_path() / ("invarkit-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(g_work);

  struct Entry {
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {"reduced pipeline matches the product-space computation", criterion1},
      {"delay/preview emptiness pattern", criterion2},
      {"scaling shape", criterion3},
      {"invariance and brute-force oracle sweep", criterion4},
      {"excluded states are doomed", criterion5},
      {"supervised runs stay safe", criterion6},
  };

  bool all = true;
  for (std::size_t i = 0; i < std::size(entries); ++i) {
    Outcome out;
    try {
      out = entries[i].fn();
    } catch (const std::exception& e) {
      out = {false, std::string("unexpected exception: ") + e.what()};
    }
    std::printf("CRITERION %zu: %s - %s (%s)\n", i + 1, out.pass ? "PASS" : "FAIL",
                entries[i].name, out.detail.c_str());
    std::fflush(stdout);
    all = all && out.pass;
  }

  std::error_code ec;
  fs::remove_all(g_work, ec);
  return all ? 0 : 1;
}
