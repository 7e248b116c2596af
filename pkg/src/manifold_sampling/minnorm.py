"""Minimum-norm point of a convex hull (Wolfe's active-set method).

Given generator columns ``G`` (n x m) and matching selection gradients ``D``
(p x m), find simplex weights ``lam`` minimising ``||G lam||`` and return
``g = G lam`` and ``d = D lam``. The weights need not be unique when the
minimiser lies on a face; ``g`` and ``d`` are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

TOL_PROJ = 1e-12

# relative tolerances inside Wolfe's method (scaled by max ||G_i||^2)
_TOL_MAJOR = 1e-14
_TOL_WEIGHT = 1e-12


@dataclass(frozen=True)
class ProjectionResult:
    lam: np.ndarray
    g: np.ndarray
    d: np.ndarray
    norm_g: float


def _affine_minimizer(P: np.ndarray) -> np.ndarray:
    # weights mu (sum 1) of the min-norm point of aff{columns of P};
    # differences against the first column keep nearly equal columns apart
    p0 = P[:, 0]
    B = P[:, 1:] - p0[:, None]
    if B.shape[1] == 0:
        return np.ones(1)
    t = np.linalg.lstsq(B, -p0, rcond=None)[0]
    return np.concatenate([[1.0 - t.sum()], t])


def project_origin(G, D=None, max_iter: int | None = None) -> ProjectionResult:
    """Project the origin onto ``co{columns of G}``.

    ``D`` (p x m) is carried along so that ``d = D lam`` uses the same
    weights. Deterministic: ties in every pivot choice go to the lowest
    column index.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[1] == 0:
        raise ContractViolation("need at least one generator column")
    if not np.all(np.isfinite(G)):
        raise ContractViolation("generator matrix has non-finite entries")
    if D is None:
        D = np.zeros((0, G.shape[1]))
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[1] != G.shape[1] or not np.all(np.isfinite(D)):
        raise ContractViolation("D must be finite with one column per generator")

    m = G.shape[1]
    sq = np.einsum("ij,ij->j", G, G)
    scale = max(float(sq.max()), np.finfo(float).tiny)
    if max_iter is None:
        max_iter = 50 * (m + G.shape[0]) + 100

    support = [int(np.argmin(sq))]
    lam = np.array([1.0])
    x = G[:, support[0]].copy()

    for _ in range(max_iter):
        dots = G.T @ x
        j = int(np.argmin(dots))
        xx = x @ x
        if xx - dots[j] <= _TOL_MAJOR * scale or j in support:
            break
        prev = (list(support), lam.copy(), x.copy())
        support.append(j)
        lam = np.append(lam, 0.0)
        while True:
            mu = _affine_minimizer(G[:, support])
            if np.all(mu > _TOL_WEIGHT):
                lam = mu
                break
            # step from lam towards mu until a weight hits zero
            blocking = (mu <= _TOL_WEIGHT) & (lam - mu > 0)
            theta = np.min(lam[blocking] / (lam[blocking] - mu[blocking])) if blocking.any() else 1.0
            theta = min(max(theta, 0.0), 1.0)
            lam = lam + theta * (mu - lam)
            keep = lam > _TOL_WEIGHT
            if not keep.any():
                keep[int(np.argmax(lam))] = True
            support = [s for s, k in zip(support, keep) if k]
            lam = lam[keep] / lam[keep].sum()
            if len(support) == 1:
                lam = np.array([1.0])
                break
        x = G[:, support] @ lam
        if x @ x >= xx:
            # no progress in floating point: keep the previous point
            support, lam, x = prev
            break

    weights = np.zeros(m)
    weights[support] = lam
    g = G @ weights
    d = D @ weights
    return ProjectionResult(lam=weights, g=g, d=d, norm_g=float(np.linalg.norm(g)))


def verify_projection(result: ProjectionResult, G, tol: float = TOL_PROJ) -> bool:
    """Check simplex feasibility and ``g^T (v - g) >= -tol`` for every column.

    ``tol`` is scaled by ``max(1, max_i ||G_i||^2)`` so the check is
    meaningful for badly scaled generator sets.
    """
    G = np.asarray(G, dtype=float)
    lam = np.asarray(result.lam, dtype=float)
    if lam.shape != (G.shape[1],):
        return False
    scale = max(1.0, float(np.einsum("ij,ij->j", G, G).max()))
    atol = tol * scale
    if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-12 * len(lam):
        return False
    g = np.asarray(result.g, dtype=float)
    if np.linalg.norm(G @ lam - g) > np.sqrt(atol):
        return False
    return bool(np.all(G.T @ g - g @ g >= -atol))
