"""Benchmark problem constructors.

Each builder returns an immutable VIProblem with whatever exact metadata the
construction affords: the Lipschitz constant where it has a closed form, a
planted or known solution, a Jacobian-norm oracle for the 2-D problems, and
(for games) the exact bilinear gap evaluator.
"""

from __future__ import annotations

import enum
from typing import Optional

import numpy as np

from .core import VIProblem
from .metrics import SimplexBilinearGap
from .projections import Identity, Product, Simplex

POLICEMAN_BURGLAR_THETA = 0.8  # decay rate of the payoff construction


class MatrixGameKind(enum.Enum):
    RANDOM = "random"
    POLICEMAN_BURGLAR = "policeman-burglar"
    TEST_MATRIX = "test-matrix"


def spectral_norm(A: np.ndarray, tol: float = 1e-10, max_iters: int = 10000) -> float:
    """Largest singular value by power iteration on A'A, deterministic start.

    Iterates until the Rayleigh quotient stabilizes to tol relatively.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    v = np.ones(n) / np.sqrt(n)
    sigma = 0.0
    for _ in range(max_iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v_new = w / nw
        sigma_new = np.sqrt(nw)  # ||A'Av|| -> sigma^2 for unit v
        if abs(sigma_new - sigma) <= tol * max(1.0, sigma_new):
            return float(sigma_new)
        sigma, v = sigma_new, v_new
    return float(sigma)


def save_matrix_csv(A: np.ndarray, path) -> None:
    """Row-major CSV with round-trip-exact %.17g formatting."""
    np.savetxt(path, np.asarray(A, dtype=float), delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=","))


def _game_matrix(kind: MatrixGameKind, d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if kind is MatrixGameKind.RANDOM:
        return rng.uniform(-1.0, 1.0, size=(d, d))
    if kind is MatrixGameKind.POLICEMAN_BURGLAR:
        # wealth |w_i| at house i, probability of catching decays with the
        # distance between policeman and burglar positions
        w = np.abs(rng.standard_normal(d))
        i = np.arange(d)
        return w[:, None] * (1.0 - np.exp(-POLICEMAN_BURGLAR_THETA * np.abs(i[:, None] - i[None, :])))
    if kind is MatrixGameKind.TEST_MATRIX:
        # documented stand-in; the original test matrix lives in cited work
        i = np.arange(1, d + 1)
        return (i[:, None] + i[None, :] - 1.0) / (2.0 * d - 1.0)
    raise ValueError(f"unknown matrix game kind {kind}")


def make_matrix_game(
    kind: MatrixGameKind | str = MatrixGameKind.RANDOM,
    d: int = 50,
    seed: int = 0,
    A: Optional[np.ndarray] = None,
) -> VIProblem:
    """Bilinear game min_{x in simplex} max_{y in simplex} x'Ay as a VI.

    F(x, y) = (Ay, -A'x) is monotone (skew), with exact Lipschitz constant
    ||A||_2.  Pass A directly to inject an external payoff matrix.
    """
    kind = MatrixGameKind(kind) if isinstance(kind, str) else kind
    label = kind.value
    if A is None:
        if d < 2:
            raise ValueError("d must be at least 2")
        A = _game_matrix(kind, d, seed)
    else:
        label = "injected"
    A = np.asarray(A, dtype=float)
    m, n = A.shape

    def operator(z: np.ndarray) -> np.ndarray:
        x, y = z[:m], z[m:]
        return np.concatenate([A @ y, -(A.T @ x)])

    projector = Product(blocks=((Simplex(m), m), (Simplex(n), n)))
    return VIProblem(
        name=f"matrix-game-{label}-{m}x{n}",
        dim=m + n,
        operator=operator,
        projector=projector,
        lipschitz=spectral_norm(A),
        gap_spec=SimplexBilinearGap(A=A),
    )


def make_qp_lagrangian(
    d: int = 100,
    planted: Optional[tuple[np.ndarray, np.ndarray]] = None,
    seed: int = 0,
) -> VIProblem:
    """Lagrangian saddle of a linearly constrained QP,

        L(x, y) = (1/2) x'Hx - h'x - <Ax - b, y>,

    as the unconstrained monotone VI with F(x, y) = (Hx - h - A'y, Ax - b).
    H = M'M/d is PSD by construction with M standard normal; A is standard
    normal.  When `planted` = (x*, y*) is given, b and h are back-solved so
    the pair is the exact solution and ships with the problem.
    """
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((d, d))
    H = M.T @ M / d
    A = rng.standard_normal((d, d))
    if planted is not None:
        x_star = np.asarray(planted[0], dtype=float)
        y_star = np.asarray(planted[1], dtype=float)
        b = A @ x_star
        h = H @ x_star - A.T @ y_star
        solution = np.concatenate([x_star, y_star])
    else:
        h = rng.standard_normal(d)
        b = rng.standard_normal(d)
        solution = None

    def operator(z: np.ndarray) -> np.ndarray:
        x, y = z[:d], z[d:]
        return np.concatenate([H @ x - h - A.T @ y, A @ x - b])

    J = np.block([[H, -A.T], [A, np.zeros((d, d))]])
    return VIProblem(
        name=f"qp-lagrangian-{d}",
        dim=2 * d,
        operator=operator,
        projector=Identity(dim=2 * d),
        lipschitz=spectral_norm(J),
        solution=solution,
    )


def _poly_feedback_problem(name, F1, F2, jac, lipschitz=None, solution=None, rho=None):
    """Assemble a 2-D unconstrained problem from coordinate maps (vectorized)."""

    def operator(z):
        return np.array([F1(z[0], z[1]), F2(z[0], z[1])], dtype=float)

    def operator_batch(Z):
        Z = np.asarray(Z, dtype=float)
        return np.stack([F1(Z[:, 0], Z[:, 1]), F2(Z[:, 0], Z[:, 1])], axis=1)

    def jacobian_spectral_norm(z):
        return float(np.linalg.norm(jac(z[0], z[1]), 2))

    return VIProblem(
        name=name, dim=2, operator=operator, projector=Identity(dim=2),
        lipschitz=lipschitz, solution=solution, rho=rho,
        jacobian_spectral_norm=jacobian_spectral_norm,
        operator_batch=operator_batch,
    )


def make_forsaken() -> VIProblem:
    """The 'Forsaken' 2-D min-max instance

        min_x max_y  x(y - 0.45) + f(x) - f(y),
        f(t) = t^2/4 - t^4/2 + t^6/6,

    whose operator is F = (y - 0.45 + f'(x), -x + f'(y)) with
    f'(t) = t/2 - 2t^3 + t^5.  It has a critical point near (0.08, 0.4)
    (attached as the approximate reference solution) plus two attracting
    limit cycles that trap insufficiently conservative methods.
    """

    def fp(t):
        return 0.5 * t - 2.0 * t**3 + t**5

    def fpp(t):
        return 0.5 - 6.0 * t**2 + 5.0 * t**4

    def jac(x, y):
        return np.array([[fpp(x), 1.0], [-1.0, fpp(y)]])

    return _poly_feedback_problem(
        "forsaken",
        F1=lambda x, y: y - 0.45 + fp(x),
        F2=lambda x, y: -x + fp(y),
        jac=jac,
        solution=np.array([0.08, 0.4]),
    )


def make_polar_game(a: float = 1.0 / 3.0) -> VIProblem:
    """The 'Polar Game': F(x, y) = (psi(x, y) - y, psi(y, x) + x) with

        psi(x, y) = (a/4) x (x^2 + y^2 - 1)(4x^2 + 4y^2 - 1).

    The unique solution sits at the origin; psi vanishes on the unit circle,
    where F reduces to the pure rotation (-y, x) whose limit cycle attracts
    iterates away from the center.
    """
    if a <= 0:
        raise ValueError("a must be positive")

    def psi(x, y):
        return a * 0.25 * x * (x**2 + y**2 - 1.0) * (4.0 * x**2 + 4.0 * y**2 - 1.0)

    def psi_d1(x, y):  # d psi / d first argument
        u = x**2 + y**2 - 1.0
        v = 4.0 * x**2 + 4.0 * y**2 - 1.0
        return a * 0.25 * (u * v + 2.0 * x**2 * v + 8.0 * x**2 * u)

    def psi_d2(x, y):  # d psi / d second argument
        u = x**2 + y**2 - 1.0
        v = 4.0 * x**2 + 4.0 * y**2 - 1.0
        return a * 0.5 * x * y * (v + 4.0 * u)

    def jac(x, y):
        return np.array([
            [psi_d1(x, y), psi_d2(x, y) - 1.0],
            [psi_d2(y, x) + 1.0, psi_d1(y, x)],
        ])

    return _poly_feedback_problem(
        f"polar-game-a={a:g}",
        F1=lambda x, y: psi(x, y) - y,
        F2=lambda x, y: psi(y, x) + x,
        jac=jac,
        solution=np.zeros(2),
    )


def make_lower_bound(a: float, b: float) -> VIProblem:
    """The linear weak-Minty instance F(x, y) = (ay + bx, by - ax), a > 0,
    b < 0, from the min-max problem axy + (b/2)(x^2 - y^2).

    Exact constants: L = sqrt(a^2 + b^2) and rho = -2b/(a^2 + b^2); the
    origin is the weak-Minty solution.  The regime rho*L > 1 (equivalently
    4b^2 > a^2 + b^2) is where conservative double-call baselines diverge.
    """
    if a <= 0 or b >= 0:
        raise ValueError("requires a > 0 and b < 0")
    L = float(np.sqrt(a * a + b * b))
    J = np.array([[b, a], [-a, b]])

    return _poly_feedback_problem(
        f"lower-bound-a={a:g}-b={b:g}",
        F1=lambda x, y: a * y + b * x,
        F2=lambda x, y: b * y - a * x,
        jac=lambda x, y: J,
        lipschitz=L,
        solution=np.zeros(2),
        rho=-2.0 * b / (a * a + b * b),
    )


def diverges_for_all_second_factors(a: float, b: float) -> bool:
    """True when rho * L > 1, i.e. 4b^2 > a^2 + b^2: the regime where the
    scaled-update extragradient family diverges regardless of the factor."""
    return 4.0 * b * b > a * a + b * b
