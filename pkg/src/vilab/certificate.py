"""Desk-scale solver for the 3x3 semidefinite certificate program

    max G_11  s.t.  G PSD,  tr(G M) <= 1,  G_22 <= cap,  G_33 <= cap.

The program's optimum being below the induction cap certifies the
boundedness induction for the fixed-step anchored method; the reference
instance has M = [[4,-4,2],[-4,7,-3],[2,-3,1]] and optimum ~ 1.49259.

The fixed 3x3 size makes a dependency-light approach preferable to a
general SDP engine: the PSD cone is parameterized exactly by G = VV' with
V a 3x3 matrix, and the solver runs seeded multi-start penalized ascent
over V followed by an active-set (SLSQP) polish.  Feasibility of the
reported maximizer is certified by an independent eigenvalue-based checker,
and a second, simpler ascent over the same factorization serves as the
agreement oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np
from scipy.optimize import minimize

PAPER_M = np.array([
    [4.0, -4.0, 2.0],
    [-4.0, 7.0, -3.0],
    [2.0, -3.0, 1.0],
])
PAPER_G11 = 1.49259  # reference optimum of the certificate program


@dataclass(frozen=True)
class SDPInstance:
    M: np.ndarray
    trace_bound: float = 1.0
    diag_caps: tuple = (None, 2.0, 2.0)  # per-index caps on G_ii; None = uncapped

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.shape != (3, 3) or not np.allclose(M, M.T):
            raise ValueError("M must be symmetric 3x3")
        caps = tuple(self.diag_caps)
        if len(caps) != 3 or any(c is not None and c <= 0 for c in caps):
            raise ValueError("diagonal caps must be positive or None")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "diag_caps", caps)


def paper_instance(cap: float = 2.0) -> SDPInstance:
    return SDPInstance(M=PAPER_M, trace_bound=1.0, diag_caps=(None, cap, cap))


def verify_feasible(instance: SDPInstance, G: np.ndarray, tol: float = 1e-8) -> bool:
    """Independent certificate check: min eigenvalue >= -tol, trace form and
    caps within tol."""
    G = np.asarray(G, dtype=float)
    if G.shape != (3, 3) or not np.allclose(G, G.T, atol=1e-9):
        return False
    if np.linalg.eigvalsh(G)[0] < -tol:
        return False
    if float(np.sum(G * instance.M)) > instance.trace_bound + tol:
        return False
    for i, cap in enumerate(instance.diag_caps):
        if cap is not None and G[i, i] > cap + tol:
            return False
    return True


def _feasibility_scale(instance: SDPInstance, G: np.ndarray) -> float:
    """Largest c in (0, 1] with c*G feasible; all constraints are linear in
    G with positive right-hand sides, and scaling preserves PSD."""
    c = 1.0
    tr = float(np.sum(G * instance.M))
    if tr > instance.trace_bound:
        c = min(c, instance.trace_bound / tr)
    for i, cap in enumerate(instance.diag_caps):
        if cap is not None and G[i, i] > cap:
            c = min(c, cap / G[i, i])
    return max(c, 0.0)


def _violations(instance: SDPInstance, G: np.ndarray) -> np.ndarray:
    v = [float(np.sum(G * instance.M)) - instance.trace_bound]
    for i, cap in enumerate(instance.diag_caps):
        if cap is not None:
            v.append(G[i, i] - cap)
    return np.maximum(np.asarray(v), 0.0)


def _penalized_ascent(instance: SDPInstance, V: np.ndarray, mu: float,
                      steps: int, lr: float) -> np.ndarray:
    """Gradient ascent on G_11(V) - mu * sum(violations^2), G = VV'.

    Each step ends with a rescale of V back into the feasible region, which
    keeps the ascent stable (the raw penalty dynamics can blow up from bad
    starts)."""
    E11 = np.zeros((3, 3))
    E11[0, 0] = 1.0
    for _ in range(steps):
        G = V @ V.T
        grad = 2.0 * E11 @ V
        tr_excess = float(np.sum(G * instance.M)) - instance.trace_bound
        if tr_excess > 0:
            grad -= mu * 2.0 * tr_excess * 2.0 * instance.M @ V
        for i, cap in enumerate(instance.diag_caps):
            if cap is not None and G[i, i] > cap:
                Ei = np.zeros((3, 3))
                Ei[i, i] = 1.0
                grad -= mu * 2.0 * (G[i, i] - cap) * 2.0 * Ei @ V
        V = V + lr * grad
        c = _feasibility_scale(instance, V @ V.T)
        if c < 1.0:
            V = np.sqrt(c) * V
    return V


def _polish(instance: SDPInstance, V: np.ndarray) -> np.ndarray:
    """Active-set polish of the factorized program with analytic gradients."""

    def unpack(x):
        return x.reshape(3, 3)

    def neg_obj(x):
        V = unpack(x)
        return -(V[0] @ V[0])

    def neg_obj_grad(x):
        V = unpack(x)
        g = np.zeros((3, 3))
        g[0] = -2.0 * V[0]
        return g.ravel()

    cons = [{
        "type": "ineq",
        "fun": lambda x: instance.trace_bound - float(np.sum((unpack(x) @ unpack(x).T) * instance.M)),
        "jac": lambda x: (-2.0 * instance.M @ unpack(x)).ravel(),
    }]
    for i, cap in enumerate(instance.diag_caps):
        if cap is None:
            continue
        cons.append({
            "type": "ineq",
            "fun": lambda x, i=i, cap=cap: cap - float(unpack(x)[i] @ unpack(x)[i]),
            "jac": lambda x, i=i: _row_grad(unpack(x), i),
        })
    res = minimize(neg_obj, V.ravel(), jac=neg_obj_grad, constraints=cons,
                   method="SLSQP", options={"maxiter": 300, "ftol": 1e-12})
    return unpack(res.x)


def _row_grad(V: np.ndarray, i: int) -> np.ndarray:
    g = np.zeros((3, 3))
    g[i] = -2.0 * V[i]
    return g.ravel()


def solve_certificate(
    instance: SDPInstance,
    tol: float = 1e-8,
    n_starts: int = 64,
    seed: int = 20240,
) -> tuple[float, np.ndarray]:
    """Maximize G_11 over the feasible set; returns (value, attaining G).

    Multi-start penalized ascent over the VV' factorization, SLSQP polish,
    then a deterministic scaling into exact feasibility; the best feasible
    candidate wins.  G = 0 is always feasible, so the search cannot come
    back empty-handed.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    best_val = 0.0
    best_G = np.zeros((3, 3))
    for _ in range(n_starts):
        V = rng.standard_normal((3, 3)) * rng.uniform(0.2, 1.2)
        V = _penalized_ascent(instance, V, mu=50.0, steps=150, lr=5e-3)
        V = _polish(instance, V)
        G = V @ V.T
        if not np.all(np.isfinite(G)):
            continue
        G = _feasibility_scale(instance, G) * G
        if not verify_feasible(instance, G, tol=1e-9):
            continue
        if G[0, 0] > best_val:
            best_val, best_G = float(G[0, 0]), G
    return best_val, best_G


def factorization_search(
    instance: SDPInstance,
    n_starts: int = 32,
    seed: int = 4711,
    steps: int = 6000,
) -> float:
    """Independent agreement oracle: seeded multi-start *derivative-free*
    local ascent over G = VV'.  Random perturbations of V are rescaled into
    the feasible region and accepted when they improve G_11; the step scale
    decays geometrically.  The factorization parameterizes exactly the 3x3
    PSD cone, so this searches the same feasible set as the solver by an
    unrelated mechanism; the two must land within 1e-3."""
    rng = np.random.default_rng(seed)
    best = 0.0

    def scaled_value(V):
        c = _feasibility_scale(instance, V @ V.T)
        Vc = np.sqrt(c) * V
        return float((Vc @ Vc.T)[0, 0]), Vc

    for _ in range(n_starts):
        V = rng.standard_normal((3, 3))
        val, V = scaled_value(V)
        sigma = 0.5
        for t in range(steps):
            cand = V + sigma * rng.standard_normal((3, 3))
            cval, cV = scaled_value(cand)
            if cval > val:
                val, V = cval, cV
            sigma = max(sigma * 0.998, 1e-5)
        G = V @ V.T
        G = _feasibility_scale(instance, G) * G
        if verify_feasible(instance, G, tol=1e-9):
            best = max(best, float(G[0, 0]))
    return best
