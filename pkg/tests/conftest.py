import numpy as np
import pytest

from vilab.core import VIProblem
from vilab.projections import Identity


def make_affine_monotone(d: int, seed: int, constrained=None) -> VIProblem:
    """Random affine monotone operator F(z) = (S + K) z + q with S PSD and
    K skew; exact Lipschitz constant attached."""
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((d, d))
    S = B.T @ B / d
    K = rng.standard_normal((d, d))
    K = (K - K.T) / 2.0
    M = S + K
    q = rng.standard_normal(d)
    projector = constrained if constrained is not None else Identity(dim=d)
    return VIProblem(
        name=f"affine-{d}-{seed}", dim=d,
        operator=lambda z: M @ z + q, projector=projector,
        lipschitz=float(np.linalg.norm(M, 2)),
    )


@pytest.fixture
def affine20():
    return make_affine_monotone(20, seed=42)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
