"""One-step update rules and the run loop for every algorithm in the suite.

Conventions shared by all steppers:

* A state at iteration k holds the reported iterate `z` (for the one-call
  methods that iterate an extrapolation sequence, that sequence is `z`),
  the companion point `z_bar` where one exists, and `f_curr`, the operator
  value freshly computed at iteration k's evaluation point.  Each step does
  exactly the method's per-iteration number of operator calls (1 for the
  reflected/averaged family, 2 for the double-call family) and returns the
  state at k+1.

* Initialization uses z^{-1} = zbar^{-1} = z^0; methods that need the
  operator value at the phantom previous point use F(z^0) unless an explicit
  `f_prev0` is supplied.  Passing f_prev0 = 0 reproduces the averaged
  method's own start exactly (its zbar^{-1} = z^0 anchor corresponds, in
  reflected coordinates, to a zero previous operator value), which is what
  the unconstrained-equivalence tests rely on.

* Steps never draw randomness, so a (problem, config, z0) triple replays to
  a bit-identical trace.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    Algorithm,
    Alpha0Policy,
    ConfigError,
    IterState,
    RunHistory,
    SolverConfig,
    Trace,
    TraceRow,
    VIProblem,
    GOLDEN,
)
from .stepsize import adaptive_step, linesearch_alpha0

SQRT2 = float(np.sqrt(2.0))
_FEAS_TOL = 1e-12
_MAX_BACKTRACKS = 200


@dataclass
class StepOutcome:
    next_state: IterState
    emitted: TraceRow
    ratio_active: bool = False  # adaptive rule: curvature term was binding
    local_ratio: float = np.nan  # observed ||dz||/||dF|| at this step


def _norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def _outcome(state: IterState, alpha_used: float) -> StepOutcome:
    row = TraceRow(
        iter=state.k,
        fevals=state.fevals,
        alpha=alpha_used,
        grad_norm=_norm(state.f_curr),
        min_grad_norm_sq=np.nan,  # filled by the run loop
    )
    return StepOutcome(next_state=state, emitted=row)


# ---------------------------------------------------------------------------
# double-call methods
# ---------------------------------------------------------------------------

def step_fb(state: IterState, problem: VIProblem, alpha: float) -> StepOutcome:
    """Plain forward step z^{k+1} = P_C(z^k - alpha F(z^k)).

    Included as the known-nonconvergent baseline: on bilinear problems the
    iterate norm grows by sqrt(1 + (alpha L)^2) per step for any alpha.
    """
    z_new = problem.projector.project(state.z - alpha * state.f_curr)
    f_new = problem.F(z_new)
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=z_new, z_prev=state.z,
        f_curr=f_new, f_prev=state.f_curr,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=state.fevals + 1,
    )
    return _outcome(nxt, alpha)


def step_eg(state: IterState, problem: VIProblem, alpha: float) -> StepOutcome:
    """Extragradient: extrapolate with a fresh operator value, then update.

        zbar = P_C(z - alpha F(z));  z+ = P_C(z - alpha F(zbar))

    Two operator calls; needs alpha < 1/L.
    """
    return step_eg_plus(state, problem, alpha, 1.0)


def step_eg_plus(state: IterState, problem: VIProblem, alpha: float,
                 second_step_factor: float) -> StepOutcome:
    """Extragradient with the update step scaled by a factor in (0, 1].

    Factor 1 is plain extragradient; smaller factors are the conservative
    variant used as the weak-Minty baseline.
    """
    z_bar = problem.projector.project(state.z - alpha * state.f_curr)
    f_bar = problem.F(z_bar)
    z_new = problem.projector.project(state.z - alpha * second_step_factor * f_bar)
    f_new = problem.F(z_new)
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=z_bar, z_prev=state.z,
        f_curr=f_new, f_prev=f_bar,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=state.fevals + 2,
    )
    return _outcome(nxt, alpha)


def step_fbf(state: IterState, problem: VIProblem, alpha: float) -> StepOutcome:
    """Tseng's splitting: one projection, with a post-correction

        zbar = P_C(z - alpha F(z));  z+ = zbar - alpha (F(zbar) - F(z))

    Two operator calls; z+ can leave the feasible set (the run loop marks
    the trace infeasible when it does).
    """
    z_bar = problem.projector.project(state.z - alpha * state.f_curr)
    f_bar = problem.F(z_bar)
    z_new = z_bar - alpha * (f_bar - state.f_curr)
    f_new = problem.F(z_new)
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=z_bar, z_prev=state.z,
        f_curr=f_new, f_prev=f_bar,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=state.fevals + 2,
    )
    return _outcome(nxt, alpha)


def step_curvature_eg_plus(state: IterState, problem: VIProblem, nu: float,
                           tau: float, second_step_factor: float = 0.5) -> StepOutcome:
    """Extragradient-plus step with a curvature-seeded backtracking step size.

    The trial step starts at nu / ||JF(z^k)|| (the Jacobian-norm oracle's
    cost is not charged) and shrinks by tau until the local Lipschitz test
    alpha ||F(zbar) - F(z)|| <= nu ||zbar - z|| accepts; every trial costs
    one counted operator call.
    """
    if problem.jacobian_spectral_norm is None:
        raise ConfigError("curvature-eg+ requires problem.jacobian_spectral_norm")
    jn = float(problem.jacobian_spectral_norm(state.z))
    alpha = nu / max(jn, 1e-16)
    fevals = state.fevals
    f = state.f_curr
    z_bar = state.z
    f_bar = f
    for _ in range(_MAX_BACKTRACKS):
        z_bar = problem.projector.project(state.z - alpha * f)
        f_bar = problem.F(z_bar)
        fevals += 1
        if alpha * _norm(f_bar - f) <= nu * _norm(z_bar - state.z):
            break
        alpha *= tau
    z_new = problem.projector.project(state.z - alpha * second_step_factor * f_bar)
    f_new = problem.F(z_new)
    fevals += 1
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=z_bar, z_prev=state.z,
        f_curr=f_new, f_prev=f_bar,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=fevals,
    )
    return _outcome(nxt, alpha)


# ---------------------------------------------------------------------------
# single-call methods
# ---------------------------------------------------------------------------

def step_popov(state: IterState, problem: VIProblem, alpha: float) -> StepOutcome:
    """Popov's scheme: extrapolate with the *previous* extrapolation's value.

        zbar^k = P_C(z^k - alpha F(zbar^{k-1}));  z^{k+1} = P_C(z^k - alpha F(zbar^k))

    One fresh operator call (at zbar^k, which is also the reported
    evaluation point); needs alpha < 1/(2L).  State: z = z^k,
    f_prev = F(zbar^{k-1}).
    """
    z_bar = problem.projector.project(state.z - alpha * state.f_prev)
    f_bar = problem.F(z_bar)
    z_new = problem.projector.project(state.z - alpha * f_bar)
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=z_bar, z_prev=state.z,
        f_curr=f_bar, f_prev=f_bar,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=state.fevals + 1,
    )
    return _outcome(nxt, alpha)


def step_forb(state: IterState, problem: VIProblem, alpha: float) -> StepOutcome:
    """Reflected forward step (optimistic gradient in the unconstrained case):

        z+ = P_C(z - alpha (2 F(z) - F(z_prev)))

    One operator call at the new point; needs alpha < 1/(2L).
    """
    z_new = problem.projector.project(state.z - alpha * (2.0 * state.f_curr - state.f_prev))
    f_new = problem.F(z_new)
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=z_new, z_prev=state.z,
        f_curr=f_new, f_prev=state.f_curr,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=state.fevals + 1,
    )
    return _outcome(nxt, alpha)


def step_prg(state: IterState, problem: VIProblem, alpha: float) -> StepOutcome:
    """Projected reflected gradient: evaluate at the reflected point.

        z+ = P_C(z - alpha F(2z - z_prev))

    One operator call; needs alpha < (sqrt(2)-1)/L.  At k = 0 the reflected
    point is z^0 itself, so the initial operator value is reused rather than
    recomputed.
    """
    w = 2.0 * state.z - state.z_prev
    if state.k == 0:
        f_w = state.f_curr
        cost = 0
    else:
        f_w = problem.F(w)
        cost = 1
    z_new = problem.projector.project(state.z - alpha * f_w)
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=w, z_prev=state.z,
        f_curr=f_w, f_prev=state.f_curr,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=state.fevals + cost,
    )
    return _outcome(nxt, alpha)


def step_shadow_dr(state: IterState, problem: VIProblem, alpha: float) -> StepOutcome:
    """Shadow Douglas-Rachford step: reflected correction after the projection.

        z+ = P_C(z - alpha F(z)) - alpha (F(z) - F(z_prev))

    One operator call; needs alpha < 1/(3L); the output may be infeasible.
    """
    z_new = (problem.projector.project(state.z - alpha * state.f_curr)
             - alpha * (state.f_curr - state.f_prev))
    f_new = problem.F(z_new)
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=z_new, z_prev=state.z,
        f_curr=f_new, f_prev=state.f_curr,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=state.fevals + 1,
    )
    return _outcome(nxt, alpha)


def step_graal_fixed(state: IterState, problem: VIProblem, phi: float,
                     alpha: float) -> StepOutcome:
    """Averaged-anchor step with a constant step size:

        zbar^k = ((phi-1)/phi) z^k + (1/phi) zbar^{k-1}
        z^{k+1} = P_C(zbar^k - alpha F(z^k))

    One operator call (at the new iterate).  State: z_bar = zbar^{k-1},
    initialized to z^0.
    """
    z_bar = ((phi - 1.0) / phi) * state.z + (1.0 / phi) * state.z_bar
    z_new = problem.projector.project(z_bar - alpha * state.f_curr)
    f_new = problem.F(z_new)
    nxt = IterState(
        k=state.k + 1, z=z_new, z_bar=z_bar, z_prev=state.z,
        f_curr=f_new, f_prev=state.f_curr,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=state.theta_k,
        fevals=state.fevals + 1,
    )
    return _outcome(nxt, alpha)


def step_graal_wm(state: IterState, problem: VIProblem, phi: float) -> StepOutcome:
    """Fixed-step averaged-anchor update sized for weak-Minty problems,
    alpha = (2 - phi)/L.  Smaller phi anchors harder and allows a larger
    tolerance rho < (2-phi)/(phi L) on the problem."""
    if problem.lipschitz is None:
        raise ConfigError("weak-Minty constant-step mode needs problem.lipschitz")
    alpha = (2.0 - phi) / problem.lipschitz
    return step_graal_fixed(state, problem, phi, alpha)


def step_agraal(state: IterState, problem: VIProblem, phi: float, gamma: float,
                alpha_max: Optional[float] = None) -> StepOutcome:
    """Adaptive averaged-anchor step (one operator call).

    For k >= 1:

        alpha_k = min(gamma alpha_{k-1},
                      (phi theta_{k-1} / (4 alpha_{k-1})) ||z^k - z^{k-1}||^2
                                                        / ||F(z^k) - F(z^{k-1})||^2)
        zbar^k  = ((phi-1)/phi) z^k + (1/phi) zbar^{k-1}
        z^{k+1} = P_C(zbar^k - alpha_k F(z^k))
        theta_k = phi alpha_k / alpha_{k-1}

    At k = 0 the plain forward step z^1 = P_C(z^0 - alpha_0 F(z^0)) applies;
    the run loop decides alpha_0 (fixed or by linesearch).
    """
    if state.k == 0:
        alpha = state.alpha_k  # alpha_0, already decided by the caller
        z_new = problem.projector.project(state.z - alpha * state.f_curr)
        theta = phi
        ratio_active, local_ratio = False, np.inf
    else:
        dz_sq = float(np.sum((state.z - state.z_prev) ** 2))
        df_sq = float(np.sum((state.f_curr - state.f_prev) ** 2))
        alpha, ratio_active, local_ratio = adaptive_step(
            phi, gamma, state.alpha_k, state.theta_k, dz_sq, df_sq, alpha_max)
        z_bar = ((phi - 1.0) / phi) * state.z + (1.0 / phi) * state.z_bar
        z_new = problem.projector.project(z_bar - alpha * state.f_curr)
        theta = phi * alpha / state.alpha_k
    f_new = problem.F(z_new)
    nxt = IterState(
        k=state.k + 1, z=z_new,
        z_bar=state.z if state.k == 0 else z_bar,  # zbar^0 = z^0 by initialization
        z_prev=state.z, f_curr=f_new, f_prev=state.f_curr,
        alpha_k=alpha, alpha_prev=state.alpha_k, theta_k=theta,
        fevals=state.fevals + 1,
    )
    out = _outcome(nxt, alpha)
    out.ratio_active = bool(ratio_active)
    out.local_ratio = float(local_ratio)
    return out


# ---------------------------------------------------------------------------
# run loop
# ---------------------------------------------------------------------------

def default_alpha(problem: VIProblem, config: SolverConfig) -> float:
    """Resolve the constant step size for config.algorithm.

    Uses config.alpha when given; otherwise derives the method's classical
    bound from the problem's Lipschitz constant with the (1 - epsilon)
    safety margin.
    """
    if config.alpha is not None:
        return config.alpha
    alg = config.algorithm
    if alg in (Algorithm.AGRAAL, Algorithm.CURVATURE_EG_PLUS):
        raise ConfigError(f"{alg.value} does not take a constant step size")
    L = problem.lipschitz
    if alg is Algorithm.GRAAL_WM:
        if L is None:
            raise ConfigError("alpha unset and problem.lipschitz unknown (field: alpha)")
        return (2.0 - config.phi) / L
    if L is None:
        raise ConfigError("alpha unset and problem.lipschitz unknown (field: alpha)")
    margin = 1.0 - config.epsilon
    if alg in (Algorithm.FB, Algorithm.EG, Algorithm.FBF, Algorithm.EG_PLUS):
        return margin / L
    if alg in (Algorithm.POPOV, Algorithm.FORB):
        return margin / (2.0 * L)
    if alg is Algorithm.PRG:
        return margin * (SQRT2 - 1.0) / L
    if alg is Algorithm.SHADOW_DR:
        return margin / (3.0 * L)
    if alg is Algorithm.GRAAL_FIXED:
        if config.phi == 2.0:
            return margin / L
        if config.phi <= GOLDEN:
            return config.phi / (2.0 * L)
        raise ConfigError(
            "no default step size for phi between the golden ratio and 2; set alpha (field: alpha)")
    raise ConfigError(f"unknown algorithm {alg}")


def _is_feasible(problem: VIProblem, z: np.ndarray) -> bool:
    p = problem.projector.project(z)
    return _norm(p - z) <= _FEAS_TOL * (1.0 + _norm(z))


def run(
    problem: VIProblem,
    config: SolverConfig,
    z0: Optional[np.ndarray] = None,
    *,
    f_prev0: Optional[np.ndarray] = None,
    keep_history: bool = False,
    gap_fn: Optional[Callable[[np.ndarray], float]] = None,
    record_every: int = 1,
) -> Trace:
    """Run config.algorithm on the problem and record a trace.

    z0 defaults to the projection of the origin onto the feasible set.
    gap_fn, when given, is evaluated on the running ergodic average of the
    reported iterates z^1..z^k (uniform weights; for the adaptive method
    each iterate is weighted by the step size that produced it, a one-step
    lag from the analysis' pairing -- tests needing the exact pairing build
    averages from the history arrays).  record_every > 1 thins the rows
    (row 0 and the final row always appear); the running min of the squared
    operator norm is still maintained every iteration.
    """
    if record_every < 1:
        raise ConfigError("record_every must be >= 1")
    t0 = time.perf_counter()
    alg = config.algorithm
    z0 = problem.projector.project(
        np.asarray(z0, dtype=float) if z0 is not None else problem.default_start())

    f0 = problem.F(z0)
    fevals = 1
    linesearch_fevals = 0
    alpha0 = np.nan

    if alg is Algorithm.AGRAAL:
        if config.alpha0_policy is Alpha0Policy.LINESEARCH:
            ls = linesearch_alpha0(problem, z0, config.phi, config.gamma_value, f0=f0)
            alpha0 = ls.alpha0
            linesearch_fevals = ls.fevals_used
            # all but the accepted trial's evaluation are pure search cost;
            # the accepted F(z^1) itself is recomputed by the first step
            fevals += ls.fevals_used - 1
        else:
            alpha0 = config.alpha0
            if alpha0 <= 0:
                raise ConfigError("alpha0 must be positive (field: alpha0)")
    elif alg is Algorithm.CURVATURE_EG_PLUS:
        if problem.jacobian_spectral_norm is None:
            raise ConfigError(
                "curvature-eg+ needs problem.jacobian_spectral_norm (field: algorithm)")
    else:
        alpha0 = default_alpha(problem, config)

    state = IterState(
        k=0, z=z0, z_bar=z0.copy(), z_prev=z0.copy(),
        f_curr=f0, f_prev=f0.copy() if f_prev0 is None else np.asarray(f_prev0, dtype=float),
        alpha_k=alpha0, alpha_prev=alpha0, theta_k=config.phi,
        fevals=fevals,
    )

    stepper = _make_stepper(problem, config)

    trace = Trace(problem_name=problem.name, algorithm=alg,
                  linesearch_fevals=linesearch_fevals)
    hist_z, hist_zbar, hist_f = [z0.copy()], [state.z_bar.copy()], [f0.copy()]
    hist_alpha, hist_theta = [], []
    hist_ratio, hist_lratio, hist_avg = [], [], []

    # running ergodic average of z^1..z^k (z^0 excluded, matching the rate
    # statements) with per-iterate weights
    avg_num = np.zeros_like(z0)
    avg_den = 0.0
    min_gsq = np.inf
    z_star = problem.solution

    def emit(row_iter: int, st: IterState, alpha_used: float, force: bool):
        nonlocal min_gsq
        g = _norm(st.f_curr)
        min_gsq = min(min_gsq, g * g)
        if not (force or row_iter % record_every == 0):
            return
        gap = None
        if gap_fn is not None and avg_den > 0:
            gap = float(gap_fn(avg_num / avg_den))
        dist = _norm(st.z - z_star) if z_star is not None else None
        row = TraceRow(
            iter=row_iter, fevals=st.fevals, alpha=alpha_used, grad_norm=g,
            min_grad_norm_sq=min_gsq, gap=gap, dist=dist,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        trace.rows.append(row)
        if trace.feasible and not _is_feasible(problem, st.z):
            trace.feasible = False

    def hits_tol(st: IterState) -> bool:
        return config.grad_tol > 0 and _norm(st.f_curr) <= config.grad_tol

    trace.stopped_by_tol = hits_tol(state)
    emit(0, state, alpha0, force=trace.stopped_by_tol or config.max_iters == 0)

    it = 0
    while not trace.stopped_by_tol and it < config.max_iters:
        out = stepper(state)
        state = out.next_state
        it += 1
        if not (np.all(np.isfinite(state.z)) and np.all(np.isfinite(state.f_curr))):
            # diverged orbit: record what we know and stop
            trace.diverged = True
            row = TraceRow(iter=it, fevals=state.fevals, alpha=out.emitted.alpha,
                           grad_norm=np.inf, min_grad_norm_sq=min_gsq,
                           wall_ms=(time.perf_counter() - t0) * 1e3)
            trace.rows.append(row)
            break
        w = out.emitted.alpha if alg is Algorithm.AGRAAL else 1.0
        avg_num += w * state.z
        avg_den += w
        if keep_history:
            hist_z.append(state.z.copy())
            hist_zbar.append(state.z_bar.copy())
            hist_f.append(state.f_curr.copy())
            hist_alpha.append(out.emitted.alpha)
            hist_theta.append(state.theta_k)
            hist_ratio.append(out.ratio_active)
            hist_lratio.append(out.local_ratio)
            hist_avg.append(avg_num / avg_den)
        trace.stopped_by_tol = hits_tol(state)
        emit(it, state, out.emitted.alpha,
             force=trace.stopped_by_tol or it == config.max_iters)

    if keep_history:
        trace.history = RunHistory(
            z=np.asarray(hist_z), z_bar=np.asarray(hist_zbar), f=np.asarray(hist_f),
            alpha=np.asarray(hist_alpha), theta=np.asarray(hist_theta),
            z_avg=np.asarray(hist_avg) if hist_avg else None,
            ratio_active=np.asarray(hist_ratio, dtype=bool),
            local_ratio=np.asarray(hist_lratio),
        )
    return trace


def _make_stepper(problem: VIProblem, config: SolverConfig):
    alg = config.algorithm
    if alg is Algorithm.AGRAAL:
        phi, gamma, amax = config.phi, config.gamma_value, config.alpha_max
        return lambda st: step_agraal(st, problem, phi, gamma, amax)
    if alg is Algorithm.CURVATURE_EG_PLUS:
        nu, tau, ssf = config.nu, config.tau, config.second_step_factor
        return lambda st: step_curvature_eg_plus(st, problem, nu, tau, ssf)
    alpha = default_alpha(problem, config)
    if alg is Algorithm.FB:
        return lambda st: step_fb(st, problem, alpha)
    if alg is Algorithm.EG:
        return lambda st: step_eg(st, problem, alpha)
    if alg is Algorithm.EG_PLUS:
        ssf = config.second_step_factor
        return lambda st: step_eg_plus(st, problem, alpha, ssf)
    if alg is Algorithm.POPOV:
        return lambda st: step_popov(st, problem, alpha)
    if alg is Algorithm.FBF:
        return lambda st: step_fbf(st, problem, alpha)
    if alg is Algorithm.FORB:
        return lambda st: step_forb(st, problem, alpha)
    if alg is Algorithm.PRG:
        return lambda st: step_prg(st, problem, alpha)
    if alg is Algorithm.SHADOW_DR:
        return lambda st: step_shadow_dr(st, problem, alpha)
    if alg in (Algorithm.GRAAL_FIXED, Algorithm.GRAAL_WM):
        phi = config.phi
        return lambda st: step_graal_fixed(st, problem, phi, alpha)
    raise ConfigError(f"unknown algorithm {alg}")
