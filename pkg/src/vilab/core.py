"""Core data model shared by every solver: problems, configs, state, traces.

A point is a plain 1-D float ndarray.  Problems and configs are immutable
after construction and safe to share between concurrently running solves;
each run owns its own state and trace.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .projections import Product, Projection

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


class ConfigError(ValueError):
    """Raised when a solver configuration is inconsistent with the problem."""


def as_point(values) -> np.ndarray:
    """Validate and return a finite 1-D float array."""
    z = np.asarray(values, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"a point must be 1-D, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("point contains NaN or Inf")
    return z


@dataclass(frozen=True)
class VIProblem:
    """A variational inequality: find z* in C with <F(z*), z - z*> >= 0 on C.

    `operator` is the map F; `projector` realizes C.  `lipschitz` is a global
    Lipschitz constant when known analytically, `solution` a planted or
    precomputed reference point.  `jacobian_spectral_norm` (z -> ||JF(z)||)
    is only consumed by the curvature-backtracking baseline.  `operator_batch`
    optionally evaluates F on an (n, d) stack of points at once; grid-based
    estimators use it when present, otherwise they loop.
    """

    name: str
    dim: int
    operator: Callable[[np.ndarray], np.ndarray]
    projector: Projection
    lipschitz: Optional[float] = None
    solution: Optional[np.ndarray] = None
    jacobian_spectral_norm: Optional[Callable[[np.ndarray], float]] = None
    rho: Optional[float] = None
    gap_spec: Optional[object] = None  # metrics.GapSpec, kept loose to avoid a cycle
    operator_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dimension must be positive")
        if self.lipschitz is not None and self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be nonnegative")
        if self.solution is not None:
            object.__setattr__(self, "solution", as_point(self.solution))

    def F(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(self.operator(z), dtype=float)

    def default_start(self) -> np.ndarray:
        """Projection of the origin onto C: uniform strategies on simplices,
        the origin itself when unconstrained."""
        return self.projector.project(np.zeros(self.dim))


class Algorithm(enum.Enum):
    FB = "fb"
    EG = "eg"
    POPOV = "popov"
    FBF = "fbf"
    FORB = "forb"
    PRG = "prg"
    SHADOW_DR = "shadow-dr"
    GRAAL_FIXED = "graal"
    GRAAL_WM = "graal-wm"
    AGRAAL = "agraal"
    EG_PLUS = "eg+"
    CURVATURE_EG_PLUS = "curvature-eg+"


class Alpha0Policy(enum.Enum):
    FIXED = "fixed"
    LINESEARCH = "linesearch"


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm id plus every knob a run needs.

    phi/gamma only matter for the averaged-extrapolation family; alpha, when
    given, overrides the default step derived from the problem's Lipschitz
    constant via alpha = (1 - epsilon)/L (or the per-method variant).
    """

    algorithm: Algorithm
    phi: float = 1.5
    gamma: Optional[float] = None  # None: use 1/phi + 1/phi^2
    alpha: Optional[float] = None
    epsilon: float = 0.01
    alpha0_policy: Alpha0Policy = Alpha0Policy.LINESEARCH
    alpha0: float = 1.0  # used when alpha0_policy is FIXED
    second_step_factor: float = 0.5  # EG+ update-step scaling
    alpha_max: Optional[float] = None  # legacy hard cap on adaptive steps (compat only)
    nu: float = 0.99  # curvature baseline: initial step = nu/||JF||
    tau: float = 0.9  # curvature baseline: backtrack factor
    max_iters: int = 1000
    grad_tol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigError("alpha must be positive when given")
        if not 0 <= self.epsilon < 1:
            raise ConfigError("epsilon must be in [0, 1)")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be nonnegative")
        if self.grad_tol < 0:
            raise ConfigError("grad_tol must be nonnegative")
        if self.algorithm is Algorithm.GRAAL_FIXED and not 1 < self.phi <= 2:
            raise ConfigError("fixed-step averaged extrapolation requires phi in (1, 2]")
        if self.algorithm is Algorithm.GRAAL_WM and not 1 < self.phi < 2:
            raise ConfigError("weak-Minty constant-step mode requires phi in (1, 2)")
        if self.algorithm is Algorithm.AGRAAL:
            if not 1 < self.phi < GOLDEN:
                raise ConfigError(f"adaptive mode requires phi in (1, {GOLDEN:.6f})")
            g = self.gamma_value
            if not 1 < g <= 1 / self.phi + 1 / self.phi**2 + 1e-12:
                raise ConfigError("gamma must lie in (1, 1/phi + 1/phi^2]")
        if self.algorithm in (Algorithm.EG_PLUS, Algorithm.CURVATURE_EG_PLUS):
            if not 0 < self.second_step_factor <= 1:
                raise ConfigError("second_step_factor must be in (0, 1]")
        if self.algorithm is Algorithm.CURVATURE_EG_PLUS:
            if not 0 < self.nu < 1 or not 0 < self.tau < 1:
                raise ConfigError("nu and tau must be in (0, 1)")

    @property
    def gamma_value(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return 1 / self.phi + 1 / self.phi**2

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class IterState:
    """Rolling solver state.

    z is the iterate the algorithm reports (the extrapolation-sequence point
    for the one-call methods); z_bar the companion averaged/extrapolated
    point where one exists, otherwise equal to z.  f_curr holds the operator
    value at this iteration's evaluation point.
    """

    k: int
    z: np.ndarray
    z_bar: np.ndarray
    z_prev: np.ndarray
    f_curr: np.ndarray
    f_prev: np.ndarray
    alpha_k: float
    alpha_prev: float
    theta_k: float
    fevals: int


@dataclass
class TraceRow:
    iter: int
    fevals: int
    alpha: float
    grad_norm: float
    min_grad_norm_sq: float
    gap: Optional[float] = None
    dist: Optional[float] = None
    wall_ms: float = 0.0


@dataclass
class RunHistory:
    """Full per-iteration arrays, kept only when a run asks for them.

    Index k runs over iterates: z[k] = z^k, z_bar[k] the companion point,
    f[k] the operator value at iteration k's evaluation point.  alpha[k] is
    the step used to produce z^{k+1}; ratio_active[k] marks iterations where
    the adaptive rule's curvature term (not the growth term) was binding and
    local_ratio[k] stores the observed ||dz||/||dF|| there.
    """

    z: np.ndarray
    z_bar: np.ndarray
    f: np.ndarray
    alpha: np.ndarray
    theta: np.ndarray
    z_avg: Optional[np.ndarray] = None
    ratio_active: Optional[np.ndarray] = None
    local_ratio: Optional[np.ndarray] = None


@dataclass
class Trace:
    problem_name: str
    algorithm: Algorithm
    rows: list[TraceRow] = field(default_factory=list)
    history: Optional[RunHistory] = None
    stopped_by_tol: bool = False
    diverged: bool = False  # iterates or operator values left the float range
    feasible: bool = True
    linesearch_fevals: int = 0

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) if getattr(r, name) is not None else np.nan
                         for r in self.rows])


def ergodic_average(trace_points: Sequence[tuple[np.ndarray, float]]) -> np.ndarray:
    """Weighted running mean sum(w_i z^i)/sum(w_i); the plain average when all
    weights are equal.  This is the sequence the O(1/k) gap rates hold on."""
    if len(trace_points) == 0:
        raise ValueError("no iterates")
    num = None
    den = 0.0
    for z, w in trace_points:
        if w <= 0:
            raise ValueError("weights must be positive")
        num = w * np.asarray(z, dtype=float) if num is None else num + w * np.asarray(z, dtype=float)
        den += w
    return num / den


def min_max_to_vi(
    grad_x: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grad_y: Callable[[np.ndarray, np.ndarray], np.ndarray],
    set_x: Projection,
    set_y: Projection,
    name: str = "min-max",
    **problem_kwargs,
) -> VIProblem:
    """Stack a smooth min-max problem min_x max_y f(x, y) into a VI.

    The operator is F(x, y) = (grad_x f, -grad_y f) on the product set.
    Gradient output dimensions must match the respective sets.
    """
    dx, dy = set_x.dim, set_y.dim
    if dx is None or dy is None:
        raise ValueError("set_x and set_y must have fixed dimensions")

    def operator(z: np.ndarray) -> np.ndarray:
        x, y = z[:dx], z[dx:]
        gx = np.asarray(grad_x(x, y), dtype=float)
        gy = np.asarray(grad_y(x, y), dtype=float)
        if gx.shape != (dx,) or gy.shape != (dy,):
            raise ValueError("gradient output dimension does not match its set")
        return np.concatenate([gx, -gy])

    projector = Product(blocks=((set_x, dx), (set_y, dy)))
    return VIProblem(name=name, dim=dx + dy, operator=operator, projector=projector,
                     **problem_kwargs)
