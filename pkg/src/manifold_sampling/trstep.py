"""Trial steps on the master model.

The master model is a quadratic ``g^T s + 0.5 s^T B s``. Linear models are
minimised in closed form on the boundary; curved ones by solving the secular
equation ``||s(lam)|| = delta`` on the eigenbasis of ``B`` (More-Sorensen),
including the hard case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .models import MasterModel

HARD_CASE_TOL = 1e-10


@dataclass(frozen=True)
class StepCandidate:
    step: np.ndarray
    predicted_decrease: float
    source: str  # "subproblem" or "fallback"


def fallback_step(g, delta: float) -> np.ndarray:
    """Scaled steepest-descent step ``-delta g / ||g||``."""
    g = np.asarray(g, dtype=float)
    gnorm = np.linalg.norm(g)
    if not gnorm > 0:
        raise ContractViolation("fallback step needs a nonzero gradient")
    if not delta > 0:
        raise ContractViolation("radius must be positive")
    return -delta * (g / gnorm)


def _quadratic(g, B, s):
    return float(g @ s + 0.5 * s @ B @ s)


def solve_trust_region(g, B, delta: float, max_iter: int = 100) -> np.ndarray:
    """Global minimiser of ``g^T s + 0.5 s^T B s`` over ``||s|| <= delta``."""
    g = np.asarray(g, dtype=float)
    B = 0.5 * (np.asarray(B, dtype=float) + np.asarray(B, dtype=float).T)
    n = g.shape[0]
    if not delta > 0:
        raise ContractViolation("radius must be positive")
    gnorm = np.linalg.norm(g)
    if not np.any(B):
        return fallback_step(g, delta) if gnorm > 0 else np.zeros(n)

    evals, V = np.linalg.eigh(B)
    a = V.T @ g
    lmin = evals[0]
    scale = max(np.abs(evals).max(), gnorm / delta)

    def step(lam):
        return -V @ (a / (evals + lam))

    if lmin > 0:
        s = step(0.0)
        if np.linalg.norm(s) <= delta:
            return s

    # hard case: g (nearly) orthogonal to the eigenspace of lmin
    low = np.abs(evals - lmin) <= HARD_CASE_TOL * scale
    if np.linalg.norm(a[low]) <= HARD_CASE_TOL * max(gnorm, 1.0) * np.sqrt(n):
        denom = evals[~low] - lmin
        s = -V[:, ~low] @ (a[~low] / denom) if denom.size else np.zeros(n)
        snorm = np.linalg.norm(s)
        if snorm <= delta:
            tau = np.sqrt(max(delta**2 - snorm**2, 0.0))
            return s + tau * V[:, np.flatnonzero(low)[0]]

    # easy case: find lam > max(0, -lmin) with ||s(lam)|| = delta
    lo = max(0.0, -lmin)
    hi = lo + gnorm / delta + scale
    while np.linalg.norm(step(hi)) > delta:
        hi = 2.0 * hi + 1.0
    lam = hi
    for _ in range(max_iter):
        s = step(lam)
        snorm = np.linalg.norm(s)
        if abs(snorm - delta) <= 1e-12 * delta:
            break
        # Newton on 1/delta - 1/||s(lam)||
        w = a / (evals + lam)
        dnorm = -np.sum(w**2 / (evals + lam)) / snorm
        newton = lam - (1.0 / delta - 1.0 / snorm) / (dnorm / snorm**2)
        if snorm > delta:
            lo = lam
        else:
            hi = lam
        lam = newton if lo < newton < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    s = step(lam)
    snorm = np.linalg.norm(s)
    if snorm > delta:
        s *= delta / snorm
    return s


def solve_subproblem(mm: MasterModel, delta: float) -> np.ndarray:
    """Minimise the master model over ``B(center; delta)``; returns the step.

    The result is never worse than the boundary Cauchy step
    ``-delta g / ||g||``.
    """
    g = mm.gradient_at_center
    B = mm.hessian
    s = solve_trust_region(g, B, delta)
    if np.linalg.norm(g) > 0:
        sc = fallback_step(g, delta)
        if _quadratic(g, B, sc) < _quadratic(g, B, s):
            s = sc
    return s


def predicted_decrease(M_center, M_trial, d) -> float:
    """``<M(x) - M(x + s), d>``."""
    return float(np.dot(np.asarray(M_center) - np.asarray(M_trial), d))


def sufficient_decrease_ok(M_center, M_trial, d, g_norm: float, delta: float,
                           kappa_d: float, lh_kappa_h: float) -> bool:
    """``<M(x) - M(x+s), d> >= (kappa_d / 2) ||g|| min(delta, ||g|| / lh_kappa_h)``."""
    if not 0 < kappa_d < 1 or not lh_kappa_h > 0:
        raise ContractViolation("need kappa_d in (0, 1) and a positive curvature scale")
    lhs = predicted_decrease(M_center, M_trial, d)
    rhs = 0.5 * kappa_d * g_norm * min(delta, g_norm / lh_kappa_h)
    return lhs >= rhs
