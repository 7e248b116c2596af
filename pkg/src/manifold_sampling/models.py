"""Local interpolation models of the components of F.

All ``p`` component models share one interpolation set, since one call of
``F`` yields every component. The default is linear interpolation on ``n + 1``
affinely independent points of ``B(x; delta)``; points already in the
evaluation ledger are reused when they are well poised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ModelBuildFault
from .oracle import BlackBoxMap

PIVOT_THRESHOLD = 1e-4
HESSIAN_FLOOR = 1e-8


@dataclass(frozen=True)
class ComponentModelSet:
    """``m_i(x) = c_i + grads_i^T (x - center) + 0.5 (x - center)^T H_i (x - center)``."""

    center: np.ndarray
    radius: float
    constants: np.ndarray  # (p,)
    grads: np.ndarray  # (p, n)
    hessians: np.ndarray  # (p, n, n)
    interpolation_points: np.ndarray  # (k, n), center first

    @property
    def n(self) -> int:
        return self.center.shape[0]

    @property
    def p(self) -> int:
        return self.constants.shape[0]

    def values(self, x) -> np.ndarray:
        """``M(x)``, the vector of all component model values."""
        s = np.asarray(x, dtype=float) - self.center
        return self.constants + self.grads @ s + 0.5 * np.einsum("j,ijk,k->i", s, self.hessians, s)

    def change(self, step) -> np.ndarray:
        """``M(center + step) - M(center)``, formed without cancelling the constants."""
        step = np.asarray(step, dtype=float)
        return self.grads @ step + 0.5 * np.einsum("j,ijk,k->i", step, self.hessians, step)

    def gradients_at(self, x) -> np.ndarray:
        """``grad M(x)`` in the n x p column-per-component layout."""
        s = np.asarray(x, dtype=float) - self.center
        return (self.grads + self.hessians @ s).T

    @property
    def is_linear(self) -> bool:
        return not np.any(self.hessians)


@dataclass(frozen=True)
class MasterModel:
    """``m^f(x) = sum_i d_i m_i(x)`` with gradient ``g = grad M(center) d`` at the center."""

    weights: np.ndarray
    base: ComponentModelSet
    gradient_at_center: np.ndarray

    @classmethod
    def assemble(cls, base: ComponentModelSet, weights) -> "MasterModel":
        d = np.asarray(weights, dtype=float)
        return cls(weights=d, base=base, gradient_at_center=model_jacobian(base) @ d)

    @property
    def hessian(self) -> np.ndarray:
        return np.einsum("i,ijk->jk", self.weights, self.base.hessians)

    def value(self, x) -> float:
        return float(self.weights @ self.base.values(x))


def master_model_value(mm: MasterModel, x) -> float:
    return mm.value(x)


def model_jacobian(cm: ComponentModelSet) -> np.ndarray:
    """``grad M(center)``: an n x p matrix whose column i is ``grad m_i``."""
    return cm.grads.T.copy()


def hessian_bound(cm: ComponentModelSet) -> float:
    """Sum of spectral norms of the component model Hessians."""
    if cm.is_linear:
        return 0.0
    return float(sum(np.max(np.abs(np.linalg.eigvalsh(H))) for H in cm.hessians))


def _select_affine_directions(U: np.ndarray, count: int, threshold: float) -> tuple[list[int], np.ndarray]:
    """Greedy pivoting over scaled displacements (rows of ``U``).

    Returns the chosen row indices and an orthonormal basis (columns) of
    their span. Ties go to the earlier row.
    """
    n = U.shape[1]
    basis = np.zeros((n, 0))
    chosen: list[int] = []
    R = U.copy()
    while len(chosen) < count and R.shape[0]:
        norms = np.linalg.norm(R, axis=1)
        if chosen:
            norms[chosen] = -1.0
        best = int(np.argmax(norms))
        if norms[best] < threshold:
            break
        q = R[best] / norms[best]
        chosen.append(best)
        basis = np.column_stack([basis, q])
        R = R - np.outer(R @ q, q)
    return chosen, basis


def build_models(
    bbmap: BlackBoxMap,
    center,
    radius: float,
    *,
    quadratic: bool = False,
    threshold: float = PIVOT_THRESHOLD,
) -> ComponentModelSet:
    """Fully linear models of every ``F_i`` on ``B(center; radius)``.

    History points in the ball are ranked most-recent-first and selected by
    greedy pivoting on the displacement ``(y - center) / radius``; directions
    still missing are filled with fresh evaluations at ``center + radius e_j``
    for the coordinate ``e_j`` with the largest pivot. With ``quadratic=True``
    and at least ``n + 2`` usable points, minimum-Frobenius-norm quadratic
    models are fitted instead.
    """
    if not radius > 0:
        raise ContractViolation("model radius must be positive")
    x = np.asarray(center, dtype=float)
    n = bbmap.n
    fx = bbmap.evaluate(x)

    idx = bbmap.indices_in_ball(x, radius)
    center_pos = bbmap.lookup(x)
    idx = idx[idx != center_pos][::-1]
    Y = bbmap.points[idx]
    U = (Y - x) / radius
    chosen, basis = _select_affine_directions(U, n, threshold)
    dirs = [Y[i] for i in chosen]

    while len(dirs) < n:
        resid = np.eye(n) - basis @ basis.T
        norms = np.linalg.norm(resid, axis=0)
        j = int(np.argmax(norms))
        if norms[j] < threshold:
            raise ModelBuildFault("could not complete an affinely independent set")
        y = x.copy()
        y[j] += radius
        if np.array_equal(y, x):
            raise ModelBuildFault(f"radius {radius!r} too small to perturb x")
        bbmap.evaluate(y)
        dirs.append(y)
        q = resid[:, j] / norms[j]
        basis = np.column_stack([basis, q])

    points = np.vstack([x[None, :], np.array(dirs).reshape(-1, n)])
    S = points[1:] - x
    FY = np.array([bbmap.evaluate(y) for y in points[1:]]).reshape(n, -1) - fx
    p = fx.shape[0]

    if quadratic:
        extra = [i for i in range(len(idx)) if i not in set(chosen)]
        if extra:
            extra_pts = Y[extra][: (n + 1) * (n + 2) // 2 - (n + 1)]
            return _mfn_models(bbmap, x, radius, fx, np.vstack([points, extra_pts]))

    try:
        grads = np.linalg.solve(S, FY).T
    except np.linalg.LinAlgError as exc:
        raise ModelBuildFault("interpolation system is singular") from exc
    return ComponentModelSet(
        center=x.copy(),
        radius=float(radius),
        constants=fx,
        grads=grads,
        hessians=np.zeros((p, n, n)),
        interpolation_points=points,
    )


def _mfn_models(bbmap, x, radius, fx, points) -> ComponentModelSet:
    # min ||H||_F subject to interpolation; H = 0.5 sum_k lam_k s_k s_k^T
    n = x.shape[0]
    S = points[1:] - x
    k = S.shape[0]
    FY = np.array([bbmap.evaluate(y) for y in points[1:]]) - fx
    A = 0.25 * (S @ S.T) ** 2
    Phi = S
    K = np.block([[A, Phi], [Phi.T, np.zeros((n, n))]])
    rhs = np.vstack([FY, np.zeros((n, FY.shape[1]))])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise ModelBuildFault("minimum-Frobenius system is singular") from exc
    lam, grads = sol[:k], sol[k:]
    hessians = 0.5 * np.einsum("ki,kj,kl->ijl", lam, S, S)
    hessians = 0.5 * (hessians + hessians.transpose(0, 2, 1))
    return ComponentModelSet(
        center=x.copy(),
        radius=float(radius),
        constants=fx,
        grads=grads.T,
        hessians=hessians,
        interpolation_points=points,
    )
