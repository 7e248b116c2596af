"""Random piecewise-quadratic selection functions over a registry map.

``h(z) = max_j ||z - z_j||^2_{Q_j} + b_j`` with ``z_j = F(y^j)`` for points
``y^j`` drawn uniformly from the infinity-ball of radius 20 around ``x0``.
``Q_1`` is positive definite and the rest negative definite; ``b_1`` is
shifted down so that ``h(F(y^j)) = 0`` for ``j >= 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from ..oracle import PiecewiseQuadratic

SAMPLE_RADIUS = 20.0


@dataclass(frozen=True)
class PiecewiseQuadraticSpec:
    centers: np.ndarray  # (l, p)
    matrices: np.ndarray  # (l, p, p)
    offsets: np.ndarray  # (l,)
    points: np.ndarray  # (l, n), the y^j
    seed: int

    @property
    def l(self) -> int:
        return self.centers.shape[0]

    def oracle(self) -> PiecewiseQuadratic:
        return PiecewiseQuadratic(self.centers, self.matrices, self.offsets)

    def as_h_table(self) -> dict:
        return {
            "family": "piecewise_quadratic",
            "centers": self.centers.tolist(),
            "matrices": self.matrices.tolist(),
            "offsets": self.offsets.tolist(),
        }


def _definite(rng, p):
    A = rng.standard_normal((p, p))
    return A.T @ A + np.eye(p)


def generate_instance(fun, x0, l: int, seed: int) -> PiecewiseQuadraticSpec:
    if l < 2:
        raise ContractViolation("need at least two selection functions")
    x0 = np.asarray(x0, dtype=float)
    rng = np.random.default_rng(seed)
    Y = x0 + rng.uniform(-SAMPLE_RADIUS, SAMPLE_RADIUS, size=(l, x0.size))
    Z = np.array([np.asarray(fun(y), dtype=float) for y in Y])
    p = Z.shape[1]
    mats = np.array([_definite(rng, p) for _ in range(l)])
    mats[1:] *= -1.0
    diff = Z[1:] - Z[0]
    spread = np.einsum("jp,pq,jq->j", diff, mats[0], diff)
    offsets = np.zeros(l)
    offsets[0] = -2.0 * spread.max()
    return PiecewiseQuadraticSpec(centers=Z, matrices=mats, offsets=offsets, points=Y, seed=int(seed))
