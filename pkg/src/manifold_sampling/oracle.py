"""Problem interface: the counted black-box map F and the selection function h.

``F`` is treated as expensive. Every fresh evaluation goes through
:class:`BlackBoxMap`, which caches by exact coordinates and keeps an ordered
ledger of evaluated points. ``h`` is described by a :class:`SelectionOracle`
exposing the values and gradients of its finitely many smooth selection
functions ``h_j``; selection indices are 0-based throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExhausted, ContractViolation, EvaluationFault

TOL_SEL = 1e-10


class BlackBoxMap:
    """Counted, cached evaluation of ``F: R^n -> R^p``.

    Repeated queries of a bitwise-identical point are answered from the ledger
    without calling ``fun`` again. ``budget`` caps the number of fresh calls;
    asking for one more raises :class:`BudgetExhausted`.
    """

    def __init__(self, fun: Callable, n: int, p: int, budget: int | None = None):
        if n < 1 or p < 1:
            raise ContractViolation("dimensions must be positive")
        self.fun = fun
        self.n = int(n)
        self.p = int(p)
        self.budget = budget
        self.eval_count = 0
        self._index: dict[bytes, int] = {}
        self._X = np.empty((16, self.n))
        self._F = np.empty((16, self.p))

    @property
    def points(self) -> np.ndarray:
        """Evaluated points in invocation order, shape ``(eval_count, n)``."""
        return self._X[: self.eval_count]

    @property
    def values(self) -> np.ndarray:
        return self._F[: self.eval_count]

    @property
    def history(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(x.copy(), f.copy()) for x, f in zip(self.points, self.values)]

    @property
    def remaining(self) -> float:
        if self.budget is None:
            return np.inf
        return self.budget - self.eval_count

    def lookup(self, x) -> int | None:
        x = np.asarray(x, dtype=float)
        return self._index.get(x.tobytes())

    def evaluate(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=float)
        if x.shape != (self.n,) or not np.all(np.isfinite(x)):
            raise ContractViolation(f"expected a finite point of length {self.n}")
        key = x.tobytes()
        idx = self._index.get(key)
        if idx is not None:
            return self._F[idx].copy()
        if self.budget is not None and self.eval_count >= self.budget:
            raise BudgetExhausted(f"budget of {self.budget} evaluations used")
        fx = np.asarray(self.fun(x.copy()), dtype=float).reshape(-1)
        if fx.shape != (self.p,):
            raise ContractViolation(f"map returned shape {fx.shape}, expected ({self.p},)")
        if not np.all(np.isfinite(fx)):
            raise EvaluationFault(x, fx)
        if self.eval_count == len(self._X):
            self._X = np.concatenate([self._X, np.empty_like(self._X)])
            self._F = np.concatenate([self._F, np.empty_like(self._F)])
        self._X[self.eval_count] = x
        self._F[self.eval_count] = fx
        self._index[key] = self.eval_count
        self.eval_count += 1
        return fx.copy()

    __call__ = evaluate

    def indices_in_ball(self, center, radius: float) -> np.ndarray:
        """Ledger positions of points with ``||y - center|| <= radius``."""
        if self.eval_count == 0:
            return np.empty(0, dtype=int)
        dist = np.linalg.norm(self.points - np.asarray(center, dtype=float), axis=1)
        return np.flatnonzero(dist <= radius)


def evaluate_map(bbmap: BlackBoxMap, x) -> np.ndarray:
    return bbmap.evaluate(x)


class SelectionOracle:
    """A continuous selection ``h`` with known smooth pieces ``h_j``.

    Subclasses implement :meth:`values` (all ``h_j(z)`` at once) and
    :meth:`gradients`; :meth:`combined_value` defaults to the pointwise max,
    which is right for every built-in family.
    """

    dimension: int
    selection_count: int

    def values(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradients(self, z: np.ndarray, indices: Sequence[int] | None = None) -> np.ndarray:
        """Rows are ``grad h_j(z)`` for ``j`` in ``indices`` (all if None)."""
        raise NotImplementedError

    def combined_value(self, z) -> float:
        return float(np.max(self.values(np.asarray(z, dtype=float))))

    def value_of(self, j: int, z) -> float:
        self._check_index(j)
        return float(self.values(np.asarray(z, dtype=float))[j])

    def gradient_of(self, j: int, z) -> np.ndarray:
        self._check_index(j)
        return self.gradients(np.asarray(z, dtype=float), [j])[0]

    def _check_index(self, j) -> None:
        if not 0 <= j < self.selection_count:
            raise ContractViolation(
                f"selection index {j} outside 0..{self.selection_count - 1}"
            )


class PiecewiseQuadratic(SelectionOracle):
    """``h(z) = max_j ||z - z_j||^2_{Q_j} + b_j``."""

    def __init__(self, centers, matrices, offsets):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.matrices = np.asarray(matrices, dtype=float)
        self.offsets = np.asarray(offsets, dtype=float).reshape(-1)
        l, p = self.centers.shape
        if self.matrices.shape != (l, p, p) or self.offsets.shape != (l,):
            raise ContractViolation("inconsistent piecewise-quadratic parameters")
        # only the symmetric part enters the quadratic form
        self.matrices = 0.5 * (self.matrices + self.matrices.transpose(0, 2, 1))
        self.dimension = p
        self.selection_count = l

    def values(self, z):
        diff = np.asarray(z, dtype=float) - self.centers
        return np.einsum("jp,jpq,jq->j", diff, self.matrices, diff) + self.offsets

    def gradients(self, z, indices=None):
        idx = np.arange(self.selection_count) if indices is None else np.asarray(indices, dtype=int)
        for j in idx:
            self._check_index(j)
        diff = np.asarray(z, dtype=float) - self.centers[idx]
        return 2.0 * np.einsum("jpq,jq->jp", self.matrices[idx], diff)


class MaxAffine(SelectionOracle):
    """``h(z) = max_j a_j^T z + c_j``."""

    def __init__(self, slopes, intercepts=None):
        self.slopes = np.atleast_2d(np.asarray(slopes, dtype=float))
        l, p = self.slopes.shape
        self.intercepts = (
            np.zeros(l) if intercepts is None else np.asarray(intercepts, dtype=float).reshape(-1)
        )
        if self.intercepts.shape != (l,):
            raise ContractViolation("one intercept per affine piece required")
        self.dimension = p
        self.selection_count = l

    def values(self, z):
        return self.slopes @ np.asarray(z, dtype=float) + self.intercepts

    def gradients(self, z, indices=None):
        if indices is None:
            return self.slopes.copy()
        idx = np.asarray(indices, dtype=int)
        for j in idx:
            self._check_index(j)
        return self.slopes[idx].copy()


class ContinuousSelection(SelectionOracle):
    """Selection built from user callables.

    ``combine`` maps ``z`` to ``h(z)``; it must agree with one of the pieces
    at every point (checked whenever activity is queried).
    """

    def __init__(self, p: int, pieces: Sequence[Callable], piece_gradients: Sequence[Callable],
                 combine: Callable | None = None):
        if len(pieces) != len(piece_gradients) or not pieces:
            raise ContractViolation("need one gradient per selection function")
        self.dimension = int(p)
        self.selection_count = len(pieces)
        self._pieces = list(pieces)
        self._grads = list(piece_gradients)
        self._combine = combine

    def values(self, z):
        return np.array([float(h(z)) for h in self._pieces])

    def gradients(self, z, indices=None):
        idx = range(self.selection_count) if indices is None else indices
        out = []
        for j in idx:
            self._check_index(j)
            out.append(np.asarray(self._grads[j](z), dtype=float).reshape(self.dimension))
        return np.array(out).reshape(-1, self.dimension)

    def combined_value(self, z):
        if self._combine is None:
            return super().combined_value(z)
        return float(self._combine(np.asarray(z, dtype=float)))


def abs_value() -> MaxAffine:
    """``|z|`` on the real line: pieces ``z`` (index 0) and ``-z`` (index 1)."""
    return MaxAffine([[1.0], [-1.0]])


def l1_norm(p: int) -> MaxAffine:
    """``||z||_1`` as the max over all ``2^p`` signed sums."""
    if p > 12:
        raise ContractViolation("l1 as signed affine pieces is limited to p <= 12")
    signs = np.array(list(itertools.product([1.0, -1.0], repeat=p)))
    return MaxAffine(signs)


def sum_of_squares(p: int) -> PiecewiseQuadratic:
    """Smooth ``||z||^2`` as a single-piece selection."""
    return PiecewiseQuadratic(np.zeros((1, p)), np.eye(p)[None], [0.0])


@dataclass(frozen=True)
class ActivityQuery:
    """Near-activity tolerance ``sigma`` and current trust radius ``delta``."""

    sigma: float = 0.0
    delta: float = np.inf

    def __post_init__(self):
        if not (self.sigma >= 0 and self.delta >= 0):
            raise ContractViolation("sigma and delta must be nonnegative")

    @property
    def tolerance(self) -> float:
        return min(self.sigma, self.delta)


def active_indices(oracle: SelectionOracle, z, query: ActivityQuery = ActivityQuery()) -> tuple[int, ...]:
    """Indices with ``|h(z) - h_j(z)| <= min(sigma, delta)``, ascending.

    The piece closest to ``h(z)`` is always included, so the result is never
    empty. Raises :class:`ContractViolation` if no piece reproduces ``h(z)``.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ContractViolation("activity queried at a non-finite point")
    vals = oracle.values(z)
    hz = oracle.combined_value(z)
    gap = np.abs(hz - vals)
    best = int(np.argmin(gap))
    if gap[best] > TOL_SEL * max(1.0, abs(hz)):
        raise ContractViolation(f"h(z)={hz!r} matches no selection function (gap {gap[best]:.3e})")
    active = set(np.flatnonzero(gap <= query.tolerance).tolist())
    active.add(best)
    return tuple(sorted(active))


def selection_gradients(oracle: SelectionOracle, z, indices) -> list[tuple[int, np.ndarray]]:
    idx = sorted(int(j) for j in indices)
    for j in idx:
        oracle._check_index(j)
    grads = oracle.gradients(np.asarray(z, dtype=float), idx)
    if not np.all(np.isfinite(grads)):
        raise ContractViolation("selection gradient is not finite")
    return list(zip(idx, grads))
