"""Exact Euclidean projections onto the feasible sets used by the solvers.

Every projection P here satisfies P(P(z)) = P(z), is (firmly) nonexpansive,
and fixes exactly the feasible points.  All are closed-form and deterministic,
so constrained solver steps are reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Projection:
    """Base class; subclasses implement the actual map."""

    dim: int | None = None  # None means any dimension is accepted

    def project(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.project(z)

    def is_feasible(self, z: np.ndarray, tol: float = 1e-12) -> bool:
        return bool(np.linalg.norm(self.project(z) - z) <= tol)

    def _check_dim(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim != 1:
            raise ValueError(f"expected a 1-D point, got shape {z.shape}")
        if self.dim is not None and z.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: point has {z.shape[0]}, projection expects {self.dim}")
        return z


@dataclass(frozen=True)
class Identity(Projection):
    """Unconstrained case: P(z) = z."""

    dim: int | None = None

    def project(self, z: np.ndarray) -> np.ndarray:
        return self._check_dim(z)


@dataclass(frozen=True)
class Box(Projection):
    """Componentwise clipping onto [lo, hi]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds must have equal shape with lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "dim", lo.shape[0])

    def project(self, z: np.ndarray) -> np.ndarray:
        return np.clip(self._check_dim(z), self.lo, self.hi)


@dataclass(frozen=True)
class Ball(Projection):
    """Euclidean ball {z : ||z - center|| <= radius}, projected by radial scaling.

    At z = center the point is interior, so the projection is just z; no
    direction ambiguity arises.
    """

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "dim", center.shape[0])

    def project(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        d = z - self.center
        nrm = np.linalg.norm(d)
        if nrm <= self.radius:
            return z
        return self.center + (self.radius / nrm) * d


@dataclass(frozen=True)
class Simplex(Projection):
    """Probability simplex {z : z >= 0, sum(z) = 1}.

    Uses the sort-and-threshold algorithm: sort descending, find the largest
    support size j with u_j > (cumsum_j - 1)/j, subtract the threshold and
    clip.  Exact in O(d log d); stable sort keeps the run deterministic
    across platforms (the projection itself is unique regardless of ties).
    """

    dim: int

    def project(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        # the projection is invariant under adding c*ones (the simplex fixes
        # <ones, u>); shifting the max to 0 keeps the threshold arithmetic
        # well-conditioned even for inputs at 1e16 magnitudes
        z = z - z.max()
        u = np.sort(z, kind="stable")[::-1]
        css = np.cumsum(u) - 1.0
        idx = np.arange(1, z.shape[0] + 1)
        support = np.nonzero(u * idx > css)[0]
        j = support[-1]
        tau = css[j] / (j + 1.0)
        return np.maximum(z - tau, 0.0)


@dataclass(frozen=True)
class Product(Projection):
    """Cartesian product of projections, applied blockwise.

    Blocks are (projection, block_dim) pairs in order; the product projection
    of a stacked vector equals the stack of blockwise projections.
    """

    blocks: tuple = field(default=())

    def __post_init__(self):
        blocks = tuple((p, int(d)) for p, d in self.blocks)
        for p, d in blocks:
            if p.dim is not None and p.dim != d:
                raise ValueError(f"block dim {d} disagrees with projection dim {p.dim}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "dim", sum(d for _, d in blocks))

    def project(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        out = np.empty_like(z)
        off = 0
        for p, d in self.blocks:
            out[off:off + d] = p.project(z[off:off + d])
            off += d
        return out


def project(p: Projection, z: np.ndarray) -> np.ndarray:
    """Functional form of p.project(z)."""
    return p.project(z)
