#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "invarkit/delay_reduction.hpp"
#include "invarkit/invariance.hpp"
#include "invarkit/json_io.hpp"
#include "invarkit/supervisor.hpp"
#include "invarkit/system_model.hpp"

namespace py = pybind11;
using namespace invar;

namespace {

Canonicalize canonical_from_string(const std::string& s) {
  if (s == "auto") return Canonicalize::Auto;
  if (s == "on") return Canonicalize::On;
  if (s == "off") return Canonicalize::Off;
  throw std::invalid_argument("canonical must be auto, on, or off");
}

ReduceOptions make_reduce_options(int max_iter, double tol, const std::string& canonical) {
  ReduceOptions opts;
  opts.engine.max_iter = max_iter;
  opts.engine.tol = tol;
  opts.canonicalize = canonical_from_string(canonical);
  return opts;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "invariant sets for linear systems with input delay and disturbance preview";

  py::register_exception<SolverError>(mod, "SolverError");

  py::class_<HPolytope>(mod, "Polytope")
      .def(py::init([](const Matrix& A, const Vector& b) { return HPolytope(A, b); }),
           py::arg("A"), py::arg("b"))
      .def_static("box", &HPolytope::box, py::arg("lower"), py::arg("upper"))
      .def_property_readonly("dim", [](const HPolytope& p) { return p.dim; })
      .def_property_readonly("A", [](const HPolytope& p) { return p.A(); })
      .def_property_readonly("b", [](const HPolytope& p) { return p.b(); })
      .def("is_empty", [](const HPolytope& p) { return is_empty(p); })
      .def("contains", [](const HPolytope& p, const Vector& x,
                          double tol) { return contains_point(p, x, tol); },
           py::arg("x"), py::arg("tol") = tol::kContain)
      .def("support", [](const HPolytope& p, const Vector& d) { return support(p, d); },
           py::arg("direction"))
      .def("chebyshev_center", [](const HPolytope& p) { return chebyshev_center(p); })
      .def("bounding_box", [](const HPolytope& p) { return bounding_box(p); })
      .def("to_json", [](const HPolytope& p) { return dump_json(polytope_to_json(p)); })
      .def("__repr__", [](const HPolytope& p) {
        return "Polytope(dim=" + std::to_string(p.dim) +
               ", rows=" + std::to_string(p.rows()) + ")";
      });

  mod.def("set_equal",
          [](const HPolytope& a, const HPolytope& b, double tol) {
            return set_equal(a, b, tol);
          },
          py::arg("a"), py::arg("b"), py::arg("tol") = tol::kContain);

  py::class_<AugmentedState>(mod, "ProductState")
      .def(py::init<>())
      .def_readwrite("x", &AugmentedState::x)
      .def_readwrite("input_history", &AugmentedState::input_history)
      .def_readwrite("preview_window", &AugmentedState::preview_window)
      .def("flatten", &AugmentedState::flatten);

  py::class_<DelaySystemSpec>(mod, "SystemSpec")
      .def_static("load", &load_spec, py::arg("path"))
      .def_static("parse", &parse_spec, py::arg("json_text"))
      .def_property_readonly("tau", [](const DelaySystemSpec& s) { return s.tau; })
      .def_property_readonly("preview", [](const DelaySystemSpec& s) { return s.preview; })
      .def_property_readonly("state_dim",
                             [](const DelaySystemSpec& s) { return s.base.state_dim(); })
      .def_property_readonly("input_dim",
                             [](const DelaySystemSpec& s) { return s.base.input_dim(); })
      .def_property_readonly("safe_set", [](const DelaySystemSpec& s) { return s.safe_set; })
      .def("with_horizons",
           [](const DelaySystemSpec& s, int tau, int preview) {
             DelaySystemSpec out = s;
             out.tau = tau;
             out.preview = preview;
             if (preview > 0) {
               if (!out.previewed_channel) out.previewed_channel = 0;
             } else {
               out.previewed_channel.reset();
             }
             out.validate();
             return out;
           },
           py::arg("tau"), py::arg("preview") = 0)
      .def("to_json", &spec_to_json)
      .def("hash", &spec_hash)
      .def("unflatten", &AugmentedState::unflatten, py::arg("z"))
      .def("__repr__", [](const DelaySystemSpec& s) {
        return "SystemSpec(n=" + std::to_string(s.base.state_dim()) +
               ", tau=" + std::to_string(s.tau) + ", preview=" + std::to_string(s.preview) +
               ")";
      });

  py::class_<ReducedInvariantResult>(mod, "InvariantResult")
      .def_property_readonly("c_hat",
                             [](const ReducedInvariantResult& r) { return r.c_hat; })
      .def_property_readonly(
          "shrunk_safe_set",
          [](const ReducedInvariantResult& r) { return r.shrunk_safe_set; })
      .def_property_readonly("c_ext",
                             [](const ReducedInvariantResult& r) { return r.c_ext; })
      .def_property_readonly(
          "constraint_family",
          [](const ReducedInvariantResult& r) { return r.constraint_family; })
      .def_property_readonly("converged",
                             [](const ReducedInvariantResult& r) { return r.converged; })
      .def_property_readonly("maximal",
                             [](const ReducedInvariantResult& r) { return r.maximal; })
      .def_property_readonly(
          "aux_iterations",
          [](const ReducedInvariantResult& r) { return r.aux_iterations; })
      .def("__repr__", [](const ReducedInvariantResult& r) {
        return std::string("InvariantResult(") + (is_empty(r.c_ext) ? "empty" : "nonempty") +
               ", converged=" + (r.converged ? "True" : "False") + ")";
      });

  mod.def(
      "compute",
      [](const DelaySystemSpec& spec, int max_iter, double tol, const std::string& canonical) {
        return compute(spec, make_reduce_options(max_iter, tol, canonical));
      },
      py::arg("spec"), py::arg("max_iter") = 500, py::arg("tol") = 1e-6,
      py::arg("canonical") = "auto",
      "Reduced-order invariant set pipeline; returns an InvariantResult.");

  mod.def(
      "direct",
      [](const DelaySystemSpec& spec, int max_iter, double tol) {
        const AugmentedSystem aug = augment(spec);
        InvariantOptions opts;
        opts.max_iter = max_iter;
        opts.tol = tol;
        const InvariantResult res = max_invariant_set(aug.sys, aug.safe_set, opts);
        return py::make_tuple(res.set, res.converged, res.iterations);
      },
      py::arg("spec"), py::arg("max_iter") = 500, py::arg("tol") = 1e-6,
      "Invariant set of the full product system: (set, converged, iterations).");

  mod.def(
      "member",
      [](const DelaySystemSpec& spec, const ReducedInvariantResult& result, const Vector& z) {
        return member(spec, result, AugmentedState::unflatten(spec, z));
      },
      py::arg("spec"), py::arg("result"), py::arg("z"),
      "Membership of a flat product-space point, via the constraint family.");

  mod.def(
      "admissible_inputs",
      [](const DelaySystemSpec& spec, const ReducedInvariantResult& result, const Vector& z) {
        return admissible_inputs(spec, result, AugmentedState::unflatten(spec, z));
      },
      py::arg("spec"), py::arg("result"), py::arg("z"));

  mod.def("project_input", &project_input, py::arg("u_nominal"), py::arg("admissible"));

  py::class_<DisturbanceSignal>(mod, "Signal")
      .def_static("constant", &DisturbanceSignal::constant, py::arg("value"))
      .def_static("sine", &DisturbanceSignal::sine, py::arg("amplitude"), py::arg("period"),
                  py::arg("phase") = 0.0)
      .def_static("uniform_random", &DisturbanceSignal::uniform_random, py::arg("seed"))
      .def_static("replay", &DisturbanceSignal::replay, py::arg("samples"))
      .def_property_readonly("clamp_events", &DisturbanceSignal::clamp_events);

  mod.def(
      "simulate",
      [](const DelaySystemSpec& spec, const ReducedInvariantResult& result, const Matrix& K,
         std::vector<DisturbanceSignal>& signals, const Vector& z0, int steps,
         bool supervised) {
        const SimTrace trace = simulate(spec, result, K, signals,
                                        AugmentedState::unflatten(spec, z0), steps, supervised);
        return dump_json(trace_to_json(trace));
      },
      py::arg("spec"), py::arg("result"), py::arg("K"), py::arg("signals"), py::arg("z0"),
      py::arg("steps"), py::arg("supervised") = true,
      "Closed-loop run; returns the trace as a JSON string.");

  mod.def(
      "make_gain",
      [](const DelaySystemSpec& spec, int iters) {
        const AugmentedSystem aug = augment(spec);
        const int N = aug.dim();
        return make_gain(aug.sys, Matrix::Identity(N, N),
                         Matrix::Identity(aug.m, aug.m), iters);
      },
      py::arg("spec"), py::arg("iters") = 1000,
      "Identity-weight Riccati gain for the product system.");
}
