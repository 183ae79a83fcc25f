"""vilab: solvers and experiment harness for monotone and weak-Minty
variational inequalities."""

from .core import (
    Algorithm,
    Alpha0Policy,
    ConfigError,
    IterState,
    SolverConfig,
    Trace,
    TraceRow,
    VIProblem,
    ergodic_average,
    min_max_to_vi,
)
from .projections import Ball, Box, Identity, Product, Projection, Simplex, project
from .solvers import run

__all__ = [
    "Algorithm", "Alpha0Policy", "ConfigError", "IterState", "SolverConfig",
    "Trace", "TraceRow", "VIProblem", "ergodic_average", "min_max_to_vi",
    "Ball", "Box", "Identity", "Product", "Projection", "Simplex", "project",
    "run",
]
