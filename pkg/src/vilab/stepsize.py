"""Step-size machinery for the adaptive solver.

Holds the initial-step linesearch, the adaptive per-iteration rule, the
constant c that lower-bounds the average step, and the step-sum diagnostic
built on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import VIProblem

COARSE_FACTOR = 10.0
_MAX_COARSE = 400  # 10^-400 underflows long before any real operator gets here


@dataclass
class LinesearchResult:
    alpha0: float
    z1: np.ndarray
    f1: np.ndarray  # operator at z1, reusable by the caller
    trials: int
    fevals_used: int


def adaptive_step(
    phi: float,
    gamma: float,
    alpha_prev: float,
    theta_prev: float,
    dz_sq: float,
    df_sq: float,
    alpha_max: Optional[float] = None,
) -> tuple[float, bool, float]:
    """One evaluation of the adaptive rule

        alpha_k = min(gamma*alpha_{k-1},
                      (phi*theta_{k-1}/(4*alpha_{k-1})) * ||dz||^2/||dF||^2)

    returning (alpha_k, ratio_active, local_ratio) where ratio_active marks
    the curvature term being the binding one and local_ratio = ||dz||/||dF||.

    A zero operator difference makes the curvature term +inf (its limit), so
    the growth branch wins and steps keep increasing on locally constant
    regions.  alpha_max, when given, restores the legacy hard cap; it is off
    by default.
    """
    if alpha_prev <= 0.0 or not np.isfinite(alpha_prev):
        raise ValueError("adaptive rule needs a positive finite previous step")
    grow = gamma * alpha_prev
    if df_sq <= 0.0 or dz_sq <= 0.0 or not (np.isfinite(df_sq) and np.isfinite(dz_sq)):
        # dz = 0 with dF != 0 cannot happen for a deterministic operator;
        # treat degeneracies (including overflowed inputs on a diverging
        # orbit) as "no curvature information".
        curv = np.inf
        local_ratio = np.inf
    else:
        # floor at the smallest normal float: a subnormal ||dz||^2 can
        # underflow the product to exactly zero, and a zero step would
        # poison the next iteration's ratio
        curv = max((phi * theta_prev / (4.0 * alpha_prev)) * (dz_sq / df_sq),
                   float(np.finfo(float).tiny))
        local_ratio = np.sqrt(dz_sq / df_sq)
    alpha = min(grow, curv)
    ratio_active = curv <= grow
    if alpha_max is not None:
        alpha = min(alpha, alpha_max)
    return alpha, ratio_active, local_ratio


def linesearch_alpha0(
    problem: VIProblem,
    z0: np.ndarray,
    phi: float,
    gamma: float,
    f0: Optional[np.ndarray] = None,
) -> LinesearchResult:
    """Pick the initial step by backtracking on the curvature test

        alpha0 * ||F(z1) - F(z0)|| <= (phi/2) * ||z1 - z0||,
        z1 = P_C(z0 - alpha0 * F(z0)).

    Starts at alpha0 = 1.  If the test fails there, reduce coarsely by a
    factor of 10 until it passes, then refine upward on the fine gamma grid
    anchored at the passing point.  The returned alpha0 passes the test and
    gamma*alpha0 fails it (unless alpha0 = 1, the grid's largest point).

    Note the test compares local curvature at unit scale, so for operators
    with Lipschitz constant below 1 the search can return 1 outright.
    """
    if phi <= 1 or gamma <= 1:
        raise ValueError("linesearch requires phi > 1 and gamma > 1")
    z0 = np.asarray(z0, dtype=float)
    fevals = 0
    if f0 is None:
        f0 = problem.F(z0)
        fevals += 1
    trials = 0

    def test(a: float):
        nonlocal fevals, trials
        z1 = problem.projector.project(z0 - a * f0)
        f1 = problem.F(z1)
        fevals += 1
        trials += 1
        ok = a * np.linalg.norm(f1 - f0) <= (phi / 2.0) * np.linalg.norm(z1 - z0)
        return ok, z1, f1

    alpha = 1.0
    ok, z1, f1 = test(alpha)
    if not ok:
        for _ in range(_MAX_COARSE):
            alpha /= COARSE_FACTOR
            ok, z1, f1 = test(alpha)
            if ok:
                break
        else:
            raise RuntimeError("linesearch did not terminate; operator is not locally Lipschitz at z0")
        # fine refinement: climb the gamma grid while the test keeps passing
        while alpha * gamma <= 1.0:
            ok2, z1c, f1c = test(alpha * gamma)
            if not ok2:
                break
            alpha *= gamma
            z1, f1 = z1c, f1c
    return LinesearchResult(alpha0=alpha, z1=z1, f1=f1, trials=trials, fevals_used=fevals)


def compute_c(phi: float, gamma: float, max_m: int = 10**6) -> float:
    """c = min over integers m >= 2 of (phi/m) * sqrt((gamma^{m-1}-1)/(gamma-1)).

    The term grows like gamma^{m/2}/m, so it is eventually increasing; the
    scan stops once it has risen for 20 consecutive m past the running
    minimum (max_m is a safety net only).
    """
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    if phi <= 1:
        raise ValueError("phi must exceed 1")
    best = np.inf
    rising = 0
    prev = np.inf
    m = 2
    while m <= max_m:
        term = (phi / m) * np.sqrt((gamma ** (m - 1) - 1.0) / (gamma - 1.0))
        if term < best:
            best = term
            rising = 0
        elif term >= prev:
            rising += 1
            if rising >= 20:
                break
        else:
            rising = 0
        prev = term
        m += 1
    return float(best)


def check_step_sum_bound(
    alphas, L: float, phi: float, gamma: float
) -> tuple[bool, float]:
    """Check sum_{i=1}^{k} alpha_i >= (k-1) c / L at every prefix.

    `alphas` is the sequence alpha_1, alpha_2, ... actually used by the
    adaptive run (alpha_0 excluded).  L may be any valid global Lipschitz
    bound over the iterates' hull; a larger L only slackens the test.
    Returns (holds, margin) with margin the minimum prefix slack.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    c = compute_c(phi, gamma)
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size == 0:
        return True, 0.0
    sums = np.cumsum(alphas)
    k = np.arange(1, alphas.size + 1)
    slack = sums - (k - 1) * c / L
    margin = float(slack.min())
    return margin >= 0.0, margin
