"""Invariant sets for linear systems with input delay and disturbance preview.

The heavy lifting lives in the compiled ``_core`` module; this package
re-exports its public surface.
"""

from ._core import (
    InvariantResult,
    Polytope,
    ProductState,
    Signal,
    SolverError,
    SystemSpec,
    admissible_inputs,
    compute,
    direct,
    make_gain,
    member,
    project_input,
    set_equal,
    simulate,
)

__all__ = [
    "InvariantResult",
    "Polytope",
    "ProductState",
    "Signal",
    "SolverError",
    "SystemSpec",
    "admissible_inputs",
    "compute",
    "direct",
    "make_gain",
    "member",
    "project_input",
    "set_equal",
    "simulate",
]

__version__ = "0.1.0"
