"""Solve tests, the sampled stationarity measure and data profiles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..minnorm import project_origin
from ..oracle import ActivityQuery, SelectionOracle, active_indices


def f_converged(f0: float, ft: float, fstar: float, tau: float) -> bool:
    """``f0 - ft >= (1 - tau) (f0 - fstar)``."""
    return f0 - ft >= (1.0 - tau) * (f0 - fstar)


@dataclass(frozen=True)
class StationarityProbe:
    sample_count: int = 50
    radius: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1 or not self.radius > 0:
            raise ValueError("need at least one sample and a positive radius")

    def points(self, center) -> np.ndarray:
        center = np.asarray(center, dtype=float)
        n = center.size
        rng = np.random.default_rng(self.seed)
        dirs = rng.standard_normal((self.sample_count, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = self.radius * rng.uniform(size=self.sample_count) ** (1.0 / n)
        return center + dirs * radii[:, None]


def gradient_bundle(xt, probe: StationarityProbe, oracle: SelectionOracle, fun, jacobian) -> np.ndarray:
    """Columns ``grad F(s) grad h_j(F(s))`` for exactly active ``j`` at sampled ``s``."""
    exact = ActivityQuery(0.0, np.inf)
    cols = []
    for s in probe.points(xt):
        Fs = np.asarray(fun(s), dtype=float)
        J = np.asarray(jacobian(s), dtype=float)
        active = active_indices(oracle, Fs, exact)
        cols.append(J.T @ oracle.gradients(Fs, list(active)).T)
    return np.hstack(cols)


def gamma_measure(xt, probe: StationarityProbe, oracle: SelectionOracle, fun, jacobian) -> float:
    """Norm of the min-norm element of the sampled gradient bundle around ``xt``."""
    return project_origin(gradient_bundle(xt, probe, oracle, fun, jacobian)).norm_g


@dataclass
class ProfileTable:
    """Evaluations-to-solve per (problem, method); ``None`` means unsolved."""

    tau: float
    metric: str
    solved_at: dict = field(default_factory=dict)  # (problem, method) -> int | None
    dims: dict = field(default_factory=dict)  # problem -> n

    def add(self, problem: str, method: str, n: int, t: int | None) -> None:
        self.solved_at[(problem, method)] = t
        self.dims[problem] = int(n)

    @property
    def methods(self) -> list[str]:
        return sorted({m for _, m in self.solved_at})

    @property
    def problems(self) -> list[str]:
        return sorted(self.dims)


def data_profile(table: ProfileTable, budget_grid) -> dict[str, np.ndarray]:
    """Fraction of problems with ``t / (n_p + 1) <= alpha`` for each grid ``alpha``."""
    grid = np.asarray(budget_grid, dtype=float)
    problems = table.problems
    curves = {}
    for method in table.methods:
        scaled = [
            table.solved_at[(prob, method)] / (table.dims[prob] + 1)
            for prob in problems
            if table.solved_at.get((prob, method)) is not None
        ]
        scaled = np.sort(np.asarray(scaled, dtype=float))
        counts = np.searchsorted(scaled, grid, side="right")
        curves[method] = counts / max(len(problems), 1)
    return curves


def first_solve_f(f_evals, fstar: float, tau: float) -> int | None:
    """Evaluation count at which the best value so far first passes the f-test."""
    f_evals = np.asarray(f_evals, dtype=float)
    if f_evals.size == 0:
        return None
    f0 = f_evals[0]
    best = np.minimum.accumulate(f_evals)
    hits = np.flatnonzero(f0 - best >= (1.0 - tau) * (f0 - fstar))
    return int(hits[0]) + 1 if hits.size else None


def record_points(f_evals) -> np.ndarray:
    """Ledger positions where the best value so far strictly improves (first included)."""
    f_evals = np.asarray(f_evals, dtype=float)
    if f_evals.size == 0:
        return np.empty(0, dtype=int)
    prev = np.concatenate([[np.inf], np.minimum.accumulate(f_evals)[:-1]])
    return np.flatnonzero(f_evals < prev)
