// invarkit: invariant-set computation, verification, and simulation for
// linear systems with input delay and disturbance preview.
//
// Exit codes: 0 success (an empty set is a finding, not an error),
// 1 verification failure, 2 input error, 3 internal or solver error.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "invarkit/delay_reduction.hpp"
#include "invarkit/invariance.hpp"
#include "invarkit/json_io.hpp"
#include "invarkit/lp.hpp"
#include "invarkit/supervisor.hpp"
#include "invarkit/system_model.hpp"

namespace {

using namespace invar;

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

void emit_error(const std::string& kind, const std::string& message) {
  Json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << dump_json(j) << std::endl;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

double run_ms(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

ReduceOptions make_options(int max_iter, double tol, bool no_canonical) {
  ReduceOptions opts;
  opts.engine.max_iter = max_iter;
  opts.engine.tol = tol;
  opts.canonicalize = no_canonical ? Canonicalize::Off : Canonicalize::Auto;
  return opts;
}

int cmd_compute(const std::string& spec_path, const std::string& out_path, int max_iter,
                double tol, bool no_canonical) {
  const DelaySystemSpec spec = load_spec(spec_path);
  const ReducedInvariantResult res = compute(spec, make_options(max_iter, tol, no_canonical));
  const bool empty = is_empty(res.c_ext);
  if (!out_path.empty()) write_text(out_path, dump_json(result_to_json(spec, res)) + "\n");
  std::printf("iterations: %d\n", res.aux_iterations);
  std::printf("converged: %s\n", res.converged ? "true" : "false");
  std::printf("maximal: %s\n", res.maximal ? "true" : "false");
  std::printf("set: %s\n", empty ? "empty" : "nonempty");
  std::printf("timing shrink_ms: %.3f\n", res.timings.shrink_ms);
  std::printf("timing fixed_point_ms: %.3f\n", res.timings.fixed_point_ms);
  std::printf("timing assemble_ms: %.3f\n", res.timings.assemble_ms);
  std::printf("timing canonicalize_ms: %.3f\n", res.timings.canonicalize_ms);
  std::printf("timing total_ms: %.3f\n", res.timings.total_ms);
  return kExitOk;
}

int cmd_direct(const std::string& spec_path, const std::string& out_path, int max_iter,
               double tol) {
  const DelaySystemSpec spec = load_spec(spec_path);
  const AugmentedSystem aug = augment(spec);
  InvariantOptions opts;
  opts.max_iter = max_iter;
  opts.tol = tol;
  InvariantResult res;
  const double ms = run_ms([&] { res = max_invariant_set(aug.sys, aug.safe_set, opts); });
  if (!out_path.empty()) {
    Json j;
    j["spec_hash"] = spec_hash(spec);
    j["set"] = polytope_to_json(res.set);
    j["converged"] = res.converged;
    j["iterations"] = res.iterations;
    j["total_ms"] = ms;
    write_text(out_path, dump_json(j) + "\n");
  }
  std::printf("iterations: %d\n", res.iterations);
  std::printf("converged: %s\n", res.converged ? "true" : "false");
  std::printf("set: %s\n", is_empty(res.set) ? "empty" : "nonempty");
  std::printf("timing total_ms: %.3f\n", ms);
  return kExitOk;
}

HPolytope family_member_from_json(const Json& j) { return polytope_from_json(j); }

struct LoadedBundle {
  std::string spec_hash;
  HPolytope shrunk_safe_set;
  HPolytope c_hat;
  std::vector<HPolytope> constraint_family;
  std::optional<HPolytope> c_ext;
  bool converged = false;
  bool maximal = false;
};

LoadedBundle load_bundle(const std::string& path) {
  const Json j = load_json(path);
  LoadedBundle b;
  b.spec_hash = j.at("spec_hash").get<std::string>();
  b.shrunk_safe_set = polytope_from_json(j.at("shrunk_safe_set"));
  b.c_hat = polytope_from_json(j.at("c_hat"));
  for (const auto& cj : j.at("constraint_family"))
    b.constraint_family.push_back(family_member_from_json(cj));
  if (j.contains("c_ext")) b.c_ext = polytope_from_json(j.at("c_ext"));
  b.converged = j.at("flags").at("converged").get<bool>();
  b.maximal = j.at("flags").at("maximal").get<bool>();
  return b;
}

HPolytope stack_family(const std::vector<HPolytope>& family) {
  Eigen::Index rows = 0;
  for (const auto& c : family) rows += c.sys.normals.rows();
  HPolytope out;
  out.dim = family.front().dim;
  out.sys.normals = Matrix(rows, out.dim);
  out.sys.offsets = Vector(rows);
  Eigen::Index row = 0;
  for (const auto& c : family) {
    out.sys.normals.middleRows(row, c.sys.normals.rows()) = c.sys.normals;
    out.sys.offsets.segment(row, c.sys.offsets.size()) = c.sys.offsets;
    row += c.sys.normals.rows();
  }
  return out;
}

int cmd_check(const std::string& bundle_path, const std::string& spec_path) {
  const DelaySystemSpec spec = load_spec(spec_path);
  const LoadedBundle bundle = load_bundle(bundle_path);
  if (bundle.spec_hash != spec_hash(spec)) {
    emit_error("verification", "bundle was produced from a different spec");
    return kExitVerification;
  }

  const AugmentedSystem aug = augment(spec);
  HPolytope c_ext = bundle.c_ext ? *bundle.c_ext : stack_family(bundle.constraint_family);
  if (c_ext.dim != aug.dim()) {
    emit_error("verification", "bundle dimension does not match the spec");
    return kExitVerification;
  }

  bool ok = true;
  const bool set_empty = is_empty(c_ext);
  std::printf("set: %s\n", set_empty ? "empty" : "nonempty");

  if (!set_empty) {
    const bool inv = is_invariant(aug.sys, c_ext, aug.safe_set);
    std::printf("invariant: %s\n", inv ? "true" : "false");
    ok = ok && inv;
  } else {
    std::printf("invariant: true\n");
  }

  if (bundle.maximal && aug.dim() <= 6) {
    InvariantOptions opts;
    const InvariantResult direct = max_invariant_set(aug.sys, aug.safe_set, opts);
    if (direct.converged) {
      const bool same = set_equal(c_ext, direct.set, 1e-5);
      std::printf("maximality_spot_check: %s\n", same ? "pass" : "fail");
      ok = ok && same;
    } else {
      std::printf("maximality_spot_check: skipped (direct run did not converge)\n");
    }
  } else {
    std::printf("maximality_spot_check: skipped\n");
  }

  if (!ok) {
    emit_error("verification", "bundle failed verification");
    return kExitVerification;
  }
  std::printf("check: pass\n");
  return kExitOk;
}

std::vector<std::pair<int, double>> parse_fixes(const std::string& text, int dim) {
  std::vector<std::pair<int, double>> fixes;
  if (text.empty()) return fixes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--fix entries must look like index=value");
    const int idx = std::stoi(item.substr(0, eq));
    const double val = std::stod(item.substr(eq + 1));
    if (idx < 0 || idx >= dim) throw std::invalid_argument("--fix index out of range");
    fixes.emplace_back(idx, val);
  }
  return fixes;
}

int cmd_slice(const std::string& bundle_path, const std::string& fix_text,
              const std::string& out_path, int rays) {
  const LoadedBundle bundle = load_bundle(bundle_path);
  HPolytope c_ext = bundle.c_ext ? *bundle.c_ext : stack_family(bundle.constraint_family);

  const auto fixes = parse_fixes(fix_text, c_ext.dim);
  HPolytope sliced = remove_redundancy(slice(c_ext, fixes));

  std::string csv;
  csv += "# halfspaces: a_0..a_{d-1}, b  (rows satisfy a.x <= b)\n";
  for (Eigen::Index r = 0; r < sliced.sys.normals.rows(); ++r) {
    csv += "H";
    char buf[40];
    for (Eigen::Index c = 0; c < sliced.sys.normals.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), ",%.9g", sliced.sys.normals(r, c));
      csv += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.9g", sliced.sys.offsets(r));
    csv += buf;
    csv += "\n";
  }
  if (!is_empty(sliced) && sliced.dim >= 1) {
    csv += "# boundary points: one per ray from the chebyshev center\n";
    const auto [center, radius] = chebyshev_center(sliced);
    (void)radius;
    for (int k = 0; k < rays; ++k) {
      // Deterministic direction sweep; dense in 2-D, a fixed great-circle
      // family in higher dimension.
      Vector dir = Vector::Zero(sliced.dim);
      const double angle = 6.28318530717958647692 * k / rays;
      dir(0) = std::cos(angle);
      if (sliced.dim >= 2) dir(1) = std::sin(angle);
      double best = std::numeric_limits<double>::infinity();
      // Walk to the boundary along dir: max t with center + t*dir inside.
      for (Eigen::Index r = 0; r < sliced.sys.normals.rows(); ++r) {
        const double denom = sliced.sys.normals.row(r).dot(dir);
        if (denom > 1e-12) {
          const double t = (sliced.sys.offsets(r) - sliced.sys.normals.row(r).dot(center)) / denom;
          best = std::min(best, t);
        }
      }
      if (!std::isfinite(best)) continue;
      const Vector pt = center + best * dir;
      csv += "P";
      char buf[40];
      for (Eigen::Index c = 0; c < pt.size(); ++c) {
        std::snprintf(buf, sizeof(buf), ",%.9g", pt(c));
        csv += buf;
      }
      csv += "\n";
    }
  }
  if (out_path.empty())
    std::fputs(csv.c_str(), stdout);
  else
    write_text(out_path, csv);
  std::printf("slice: %s, %d halfspaces\n", is_empty(sliced) ? "empty" : "nonempty",
              static_cast<int>(sliced.sys.normals.rows()));
  return kExitOk;
}

DisturbanceSignal parse_signal(const std::string& text, int dim) {
  // Forms: const:v[:v...], sine:amp:period:phase, uniform:seed, replay:file.json
  std::stringstream ss(text);
  std::string kind;
  std::getline(ss, kind, ':');
  if (kind == "const") {
    Vector v(dim);
    std::string tok;
    for (int i = 0; i < dim; ++i) {
      if (!std::getline(ss, tok, ':'))
        throw std::invalid_argument("const signal needs one value per coordinate");
      v(i) = std::stod(tok);
    }
    return DisturbanceSignal::constant(v);
  }
  if (kind == "sine") {
    std::string amp_s, period_s, phase_s;
    if (!std::getline(ss, amp_s, ':') || !std::getline(ss, period_s, ':'))
      throw std::invalid_argument("sine signal needs amplitude and period");
    double phase = 0;
    if (std::getline(ss, phase_s, ':')) phase = std::stod(phase_s);
    Vector amp = Vector::Constant(dim, std::stod(amp_s));
    return DisturbanceSignal::sine(amp, std::stod(period_s), phase);
  }
  if (kind == "uniform") {
    std::string seed_s;
    if (!std::getline(ss, seed_s, ':'))
      throw std::invalid_argument("uniform signal needs a seed");
    return DisturbanceSignal::uniform_random(std::stoull(seed_s));
  }
  if (kind == "replay") {
    std::string path;
    std::getline(ss, path);
    const Json j = load_json(path);
    std::vector<Vector> samples;
    for (const auto& row : j) samples.push_back(vector_from_json(row));
    return DisturbanceSignal::replay(std::move(samples));
  }
  throw std::invalid_argument("unknown signal kind: " + kind);
}

int cmd_simulate(const std::string& spec_path, const std::string& bundle_path, int steps,
                 const std::vector<std::string>& signal_texts, const std::string& gain_path,
                 bool lqr, bool raw, const std::string& out_path, const std::string& z0_path) {
  const DelaySystemSpec spec = load_spec(spec_path);
  const bool supervised = !raw;

  ReducedInvariantResult res;
  if (supervised || !bundle_path.empty()) {
    if (bundle_path.empty())
      throw std::invalid_argument("supervised simulation needs a result bundle");
    const LoadedBundle bundle = load_bundle(bundle_path);
    if (bundle.spec_hash != spec_hash(spec))
      throw std::invalid_argument("bundle was produced from a different spec");
    res.aux_system = build_aux(spec);
    res.shrunk_safe_set = bundle.shrunk_safe_set;
    res.c_hat = bundle.c_hat;
    res.constraint_family = bundle.constraint_family;
    res.c_ext = bundle.c_ext ? *bundle.c_ext : stack_family(bundle.constraint_family);
    res.converged = bundle.converged;
    res.maximal = bundle.maximal;
  }

  const int n = spec.base.state_dim();
  const int m = spec.base.input_dim();
  const int N = n + m * spec.tau + spec.preview_block_dim() * spec.preview;

  if (signal_texts.size() != spec.base.dist_channels.size())
    throw std::invalid_argument("need exactly one --signal per disturbance channel");
  std::vector<DisturbanceSignal> signals;
  for (std::size_t i = 0; i < signal_texts.size(); ++i)
    signals.push_back(parse_signal(signal_texts[i], spec.base.dist_channels[i].D.dim));

  Matrix K(0, 0);
  if (!gain_path.empty() && lqr)
    throw std::invalid_argument("choose either --gain-file or --lqr, not both");
  if (!gain_path.empty()) {
    K = matrix_from_json(load_json(gain_path), N);
    if (K.rows() != m) throw std::invalid_argument("gain row count must match input dimension");
  } else if (lqr) {
    const AugmentedSystem aug = augment(spec);
    K = make_gain(aug.sys, Matrix::Identity(N, N), Matrix::Identity(m, m));
  }

  AugmentedState z0;
  if (!z0_path.empty()) {
    z0 = AugmentedState::unflatten(spec, vector_from_json(load_json(z0_path)));
  } else if (supervised && !is_empty(res.c_ext)) {
    // The preview window is driven by the signal, not free to choose, so the
    // start point must be central *given* those samples: fix the window
    // coordinates and center what is left.
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
    if (is_empty(given)) given = res.c_ext;  // window incompatible; start central anyway
    const auto [center, radius] = chebyshev_center(given);
    (void)radius;
    Vector flat(N);
    flat.head(n + m * spec.tau) = center.head(n + m * spec.tau);
    for (const auto& [idx, val] : fixes) flat(idx) = val;
    z0 = AugmentedState::unflatten(spec, flat);
  } else {
    z0 = AugmentedState::unflatten(spec, Vector::Zero(N));
  }

  const SimTrace trace = simulate(spec, res, K, signals, z0, steps, supervised);

  if (!out_path.empty()) write_text(out_path, trace_to_csv(trace));
  int violations = 0;
  int empties = 0;
  for (const auto& r : trace.records) {
    if (!r.safe) ++violations;
    if (r.admissible_empty) ++empties;
  }
  if (!trace.final_safe) ++violations;
  std::printf("steps: %d\n", static_cast<int>(trace.records.size()));
  std::printf("violations: %d\n", violations);
  std::printf("admissible_empty_steps: %d\n", empties);
  if (trace.first_violation)
    std::printf("first_violation: %d\n", *trace.first_violation);
  else
    std::printf("first_violation: none\n");
  return kExitOk;
}

int cmd_bench(const std::string& spec_path, const std::vector<int>& tau_list,
              const std::vector<int>& p_list, const std::string& method,
              const std::string& out_path, int max_iter, double tol) {
  if (method != "reduced" && method != "direct" && method != "both")
    throw std::invalid_argument("--method must be reduced, direct, or both");
  if (!p_list.empty() && p_list.size() != tau_list.size())
    throw std::invalid_argument("--p-list must match --tau-list in length");
  DelaySystemSpec base = load_spec(spec_path);

  std::string csv = "tau,p,method,empty,converged,ms\n";
  char buf[160];
  for (std::size_t i = 0; i < tau_list.size(); ++i) {
    DelaySystemSpec spec = base;
    spec.tau = tau_list[i];
    const int p = p_list.empty() ? 0 : p_list[i];
    spec.preview = p;
    if (p > 0) {
      if (!spec.previewed_channel) spec.previewed_channel = 0;
    } else {
      spec.previewed_channel.reset();
    }
    spec.validate();

    if (method == "reduced" || method == "both") {
      // Canonicalization is excluded: membership and emptiness are already
      // decided by the assembled family, and the final redundancy sweep is an
      // output-formatting cost that would swamp the comparison.
      ReduceOptions opts = make_options(max_iter, tol, true);
      bool empty = false;
      bool converged = false;
      const double ms = run_ms([&] {
        const ReducedInvariantResult r = compute(spec, opts);
        empty = is_empty(r.c_ext);
        converged = r.converged;
      });
      std::snprintf(buf, sizeof(buf), "%d,%d,reduced,%d,%d,%.9g\n", spec.tau, p, empty ? 1 : 0,
                    converged ? 1 : 0, ms);
      csv += buf;
    }
    if (method == "direct" || method == "both") {
      InvariantOptions opts;
      opts.max_iter = max_iter;
      opts.tol = tol;
      bool empty = false;
      bool converged = false;
      const double ms = run_ms([&] {
        const AugmentedSystem aug = augment(spec);
        const InvariantResult r = max_invariant_set(aug.sys, aug.safe_set, opts);
        empty = is_empty(r.set);
        converged = r.converged;
      });
      std::snprintf(buf, sizeof(buf), "%d,%d,direct,%d,%d,%.9g\n", spec.tau, p, empty ? 1 : 0,
                    converged ? 1 : 0, ms);
      csv += buf;
    }
  }
  if (out_path.empty())
    std::fputs(csv.c_str(), stdout);
  else
    write_text(out_path, csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invariant sets for linear systems with input delay and preview"};
  app.require_subcommand(1);

  std::string spec_path, out_path, bundle_path, fix_text, gain_path, z0_path, method = "reduced";
  std::vector<std::string> signal_texts;
  std::vector<int> tau_list, p_list;
  int max_iter = 500;
  double tol = 1e-6;
  bool no_canonical = false, lqr = false, raw = false;
  int steps = 100, rays = 256;

  auto* compute_cmd = app.add_subcommand("compute", "reduced-order invariant set pipeline");
  compute_cmd->add_option("spec", spec_path, "system spec JSON")->required();
  compute_cmd->add_option("--out", out_path, "result bundle path");
  compute_cmd->add_option("--max-iter", max_iter, "fixed point iteration cap");
  compute_cmd->add_option("--tol", tol, "set equality tolerance");
  compute_cmd->add_flag("--no-canonical", no_canonical, "skip final redundancy removal");

  auto* direct_cmd = app.add_subcommand("direct", "invariant set of the full product system");
  direct_cmd->add_option("spec", spec_path, "system spec JSON")->required();
  direct_cmd->add_option("--out", out_path, "result JSON path");
  direct_cmd->add_option("--max-iter", max_iter, "fixed point iteration cap");
  direct_cmd->add_option("--tol", tol, "set equality tolerance");

  auto* check_cmd = app.add_subcommand("check", "re-verify a result bundle");
  check_cmd->add_option("bundle", bundle_path, "result bundle JSON")->required();
  check_cmd->add_option("spec", spec_path, "system spec JSON")->required();

  auto* slice_cmd = app.add_subcommand("slice", "2-D slice of the computed set for plotting");
  slice_cmd->add_option("bundle", bundle_path, "result bundle JSON")->required();
  slice_cmd->add_option("--fix", fix_text, "fixed coordinates, e.g. 2=0.0,3=1.5");
  slice_cmd->add_option("--out", out_path, "CSV output path (stdout otherwise)");
  slice_cmd->add_option("--rays", rays, "boundary sample count");

  auto* sim_cmd = app.add_subcommand("simulate", "closed-loop run with the safety supervisor");
  sim_cmd->add_option("spec", spec_path, "system spec JSON")->required();
  sim_cmd->add_option("bundle", bundle_path, "result bundle JSON (needed when supervised)");
  sim_cmd->add_option("--steps", steps, "number of steps");
  sim_cmd->add_option("--signal", signal_texts,
                      "per-channel source: const:v[:v...], sine:amp:period[:phase], "
                      "uniform:seed, replay:file.json");
  sim_cmd->add_option("--gain-file", gain_path, "JSON matrix K for u = -K z");
  sim_cmd->add_flag("--lqr", lqr, "derive K from identity-weight Riccati iteration");
  sim_cmd->add_flag("--raw", raw, "disable the supervisor");
  sim_cmd->add_option("--out", out_path, "trace CSV path");
  sim_cmd->add_option("--z0", z0_path, "initial product state JSON vector");

  auto* bench_cmd = app.add_subcommand("bench", "timing sweep over delay/preview settings");
  bench_cmd->add_option("spec", spec_path, "system spec JSON")->required();
  bench_cmd->add_option("--tau-list", tau_list, "delay values")->required();
  bench_cmd->add_option("--p-list", p_list, "preview values (zipped with --tau-list)");
  bench_cmd->add_option("--method", method, "reduced, direct, or both");
  bench_cmd->add_option("--out", out_path, "CSV output path (stdout otherwise)");
  bench_cmd->add_option("--max-iter", max_iter, "fixed point iteration cap");
  bench_cmd->add_option("--tol", tol, "set equality tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error("input", e.what());
    return kExitInput;
  }

  try {
    if (compute_cmd->parsed())
      return cmd_compute(spec_path, out_path, max_iter, tol, no_canonical);
    if (direct_cmd->parsed()) return cmd_direct(spec_path, out_path, max_iter, tol);
    if (check_cmd->parsed()) return cmd_check(bundle_path, spec_path);
    if (slice_cmd->parsed()) return cmd_slice(bundle_path, fix_text, out_path, rays);
    if (sim_cmd->parsed())
      return cmd_simulate(spec_path, bundle_path, steps, signal_texts, gain_path, lqr, raw,
                          out_path, z0_path);
    if (bench_cmd->parsed())
      return cmd_bench(spec_path, tau_list, p_list, method, out_path, max_iter, tol);
  } catch (const std::invalid_argument& e) {
    emit_error("input", e.what());
    return kExitInput;
  } catch (const std::domain_error& e) {
    emit_error("input", e.what());
    return kExitInput;
  } catch (const SolverError& e) {
    emit_error("solver", e.what());
    return kExitInternal;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return kExitInternal;
  }
  emit_error("input", "no subcommand given");
  return kExitInput;
}
