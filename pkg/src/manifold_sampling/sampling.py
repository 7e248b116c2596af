"""Sample set Z^k, generator matrices and the (z, j) pair searches.

A pair ``(z, j)`` certifies a trial point when ``z`` lies on the segment
between ``F(x)`` and ``F(x + s)``, ``j`` is active at ``z`` and

    grad h_j(z)^T (F(x) - F(x + s)) <= h(F(x)) - h(F(x + s)),

i.e. the linearisation of ``h_j`` at ``z`` overestimates ``h(F(x + s))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, PairSearchExhausted
from .oracle import ActivityQuery, SelectionOracle, active_indices

MSG1 = "msg1"
MSG2 = "msg2"
VARIANTS = (MSG1, MSG2)


def pair_tolerance(h_x: float, h_xs: float) -> float:
    return 1e-10 * (1.0 + abs(h_x) + abs(h_xs))


@dataclass
class GeneratorState:
    """Samples ``z`` with their active index sets and assembled generators.

    ``origins`` records how each sample entered: ``("center",)``,
    ``("history", ledger_position)`` or ``("segment", alpha, ledger_position)``
    where the sample is ``alpha F(x^k) + (1 - alpha) F(y)``.
    """

    samples: list = field(default_factory=list)
    active_sets: list = field(default_factory=list)
    origins: list = field(default_factory=list)
    D: np.ndarray | None = None
    G: np.ndarray | None = None
    pair_index: list = field(default_factory=list)
    _keys: dict = field(default_factory=dict)

    def add(self, z, active, origin) -> bool:
        """Append ``z`` unless an identical sample exists; True if added."""
        z = np.asarray(z, dtype=float)
        key = z.tobytes()
        if key in self._keys:
            return False
        self._keys[key] = len(self.samples)
        self.samples.append(z.copy())
        self.active_sets.append(tuple(active))
        self.origins.append(origin)
        return True

    @property
    def active_union(self) -> set[int]:
        out: set[int] = set()
        for a in self.active_sets:
            out.update(a)
        return out

    @property
    def column_count(self) -> int:
        return sum(len(a) for a in self.active_sets)


class SampleCache:
    """Active sets and selection gradients of samples, reused across iterations.

    MSG-2 revisits the same history images many times; both quantities depend
    only on the sample and the activity tolerance, not on the iterate.
    """

    def __init__(self):
        self._active: dict = {}
        self._grads: dict = {}

    def active(self, oracle, z, query):
        key = (z.tobytes(), query.tolerance)
        hit = self._active.get(key)
        if hit is None:
            with np.errstate(over="ignore", invalid="ignore"):
                finite = bool(np.isfinite(oracle.combined_value(z)))
            hit = active_indices(oracle, z, query) if finite else ()
            self._active[key] = hit
        return hit

    def gradients(self, oracle, z, active):
        key = (z.tobytes(), active)
        hit = self._grads.get(key)
        if hit is None:
            hit = oracle.gradients(z, list(active))
            self._grads[key] = hit
        return hit


def _add_ball_images(state, oracle, query, bbmap, xk, delta, cache):
    for pos in bbmap.indices_in_ball(xk, delta):
        fy = bbmap.values[pos]
        if fy.tobytes() in state._keys:
            continue
        active = cache.active(oracle, fy, query)
        if active:  # empty when h overflows at this image
            state.add(fy, active, ("history", int(pos)))


def init_samples(strategy: str, Fxk, delta: float, bbmap, xk, oracle: SelectionOracle,
                 query: ActivityQuery, cache: SampleCache | None = None) -> GeneratorState:
    """``{F(x^k)}`` for MSG-1; MSG-2 adds ``F(y)`` for every ledger point in the ball."""
    if strategy not in VARIANTS:
        raise ContractViolation(f"unknown variant {strategy!r}")
    cache = cache or SampleCache()
    state = GeneratorState()
    Fxk = np.asarray(Fxk, dtype=float)
    state.add(Fxk, active_indices(oracle, Fxk, query), ("center",))
    if strategy == MSG2:
        _add_ball_images(state, oracle, query, bbmap, xk, delta, cache)
    return state


def grow_samples(state: GeneratorState, strategy: str, cert: "PairCertificate", bbmap, xk,
                 delta: float, oracle: SelectionOracle, query: ActivityQuery, trial_pos=None,
                 cache: SampleCache | None = None) -> None:
    cache = cache or SampleCache()
    active = active_indices(oracle, cert.z, query)
    state.add(cert.z, active, ("segment", float(cert.alpha), trial_pos))
    if strategy == MSG2:
        _add_ball_images(state, oracle, query, bbmap, xk, delta, cache)


def assemble_generators(state: GeneratorState, jac, oracle: SelectionOracle,
                        cache: SampleCache | None = None):
    """Fill ``D`` (p x m), ``G = jac D`` (n x m) and the column map.

    Columns follow sample insertion order, then ascending ``j``.
    """
    jac = np.asarray(jac, dtype=float)
    if jac.shape[1] != oracle.dimension:
        raise ContractViolation(f"model Jacobian has {jac.shape[1]} columns, expected {oracle.dimension}")
    cols, pairs = [], []
    for pos, (z, active) in enumerate(zip(state.samples, state.active_sets)):
        if cache is None:
            grads = oracle.gradients(z, list(active))
        else:
            grads = cache.gradients(oracle, z, tuple(active))
        cols.append(grads)
        pairs.extend((pos, j) for j in active)
    D = np.vstack(cols).T
    if not np.all(np.isfinite(D)):
        raise ContractViolation("non-finite selection gradient")
    state.D = D
    state.G = jac @ D
    state.pair_index = pairs
    return state.D, state.G, state.pair_index


@dataclass(frozen=True)
class PairCertificate:
    z: np.ndarray
    j: int
    alpha: float  # z = alpha F(x) + (1 - alpha) F(x + s)
    method: str = "grid"


class _PairTest:
    """Evaluates the certificate condition at points of one segment."""

    def __init__(self, oracle, Fx, Fxs, query):
        self.oracle = oracle
        self.Fx = np.asarray(Fx, dtype=float)
        self.Fxs = np.asarray(Fxs, dtype=float)
        self.query = query
        self.h_x = oracle.combined_value(self.Fx)
        self.h_xs = oracle.combined_value(self.Fxs)
        self.diff = self.Fx - self.Fxs
        self.tol = pair_tolerance(self.h_x, self.h_xs)

    def point(self, alpha: float) -> np.ndarray:
        if alpha == 1.0:
            return self.Fx.copy()
        if alpha == 0.0:
            return self.Fxs.copy()
        return alpha * self.Fx + (1.0 - alpha) * self.Fxs

    def check(self, alpha: float, method: str) -> PairCertificate | None:
        z = self.point(alpha)
        active = active_indices(self.oracle, z, self.query)
        lhs = self.oracle.gradients(z, list(active)) @ self.diff
        ok = lhs <= self.h_x - self.h_xs + self.tol
        if not ok.any():
            return None
        # largest grad^T (F(x+s) - F(x)) among passing j; lowest j on ties
        cand = [(lhs[i], j) for i, j in enumerate(active) if ok[i]]
        _, j = min(cand)
        return PairCertificate(z=z, j=int(j), alpha=float(alpha), method=method)


def grid_search_pair(oracle: SelectionOracle, Fx, Fxs, query: ActivityQuery,
                     max_level: int = 30) -> PairCertificate:
    """Endpoints first, then dyadic grid points ``(2k - 1) / 2^l`` level by level."""
    test = _PairTest(oracle, Fx, Fxs, query)
    for alpha in (1.0, 0.0):
        cert = test.check(alpha, "grid")
        if cert is not None:
            return cert
    for level in range(1, max_level + 1):
        denom = 2.0**level
        for k in range(1, 2 ** (level - 1) + 1):
            cert = test.check((2 * k - 1) / denom, "grid")
            if cert is not None:
                return cert
    raise PairSearchExhausted(f"grid search found no pair within {max_level} levels")


def bisection_search_pair(oracle: SelectionOracle, Fx, Fxs, query: ActivityQuery,
                          max_iter: int = 100) -> PairCertificate:
    """Endpoint checks, then bisection on the segment parameter.

    A failing midpoint whose ``h`` value lies above the chord moves the upper
    end down; otherwise the lower end moves up.
    """
    test = _PairTest(oracle, Fx, Fxs, query)
    for alpha in (1.0, 0.0):
        cert = test.check(alpha, "bisection")
        if cert is not None:
            return cert
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        cert = test.check(mid, "bisection")
        if cert is not None:
            return cert
        h_mid = oracle.combined_value(test.point(mid))
        if h_mid > mid * test.h_x + (1.0 - mid) * test.h_xs:
            hi = mid
        else:
            lo = mid
    raise PairSearchExhausted(f"bisection found no pair in {max_iter} iterations")


def find_pair(oracle, Fx, Fxs, query, *, bisection_iter: int = 100, grid_levels: int = 30):
    """Bisection first; grid search if bisection gives up."""
    try:
        return bisection_search_pair(oracle, Fx, Fxs, query, bisection_iter)
    except PairSearchExhausted:
        return grid_search_pair(oracle, Fx, Fxs, query, grid_levels)


def verify_certificate(oracle: SelectionOracle, cert: PairCertificate, Fx, Fxs,
                       query: ActivityQuery) -> bool:
    """Recompute the certificate condition from scratch."""
    Fx = np.asarray(Fx, dtype=float)
    Fxs = np.asarray(Fxs, dtype=float)
    if not 0.0 <= cert.alpha <= 1.0:
        return False
    if np.linalg.norm(cert.z - (cert.alpha * Fx + (1 - cert.alpha) * Fxs)) > 1e-12 * (
        1 + np.linalg.norm(Fx) + np.linalg.norm(Fxs)
    ):
        return False
    if cert.j not in active_indices(oracle, cert.z, query):
        return False
    h_x, h_xs = oracle.combined_value(Fx), oracle.combined_value(Fxs)
    lhs = float(oracle.gradient_of(cert.j, cert.z) @ (Fx - Fxs))
    return lhs <= h_x - h_xs + pair_tolerance(h_x, h_xs)


def obtuse_witness(state: GeneratorState, j: int, s, jac, d, oracle: SelectionOracle):
    """Some sample ``z'`` with ``j`` active and ``s^T jac (grad h_j(z') - d) <= tol``."""
    s = np.asarray(s, dtype=float)
    js = np.asarray(jac, dtype=float).T @ s  # (p,)
    for z, active in zip(state.samples, state.active_sets):
        if j not in active:
            continue
        grad = oracle.gradient_of(j, z)
        val = float(js @ (grad - d))
        tol = 1e-10 * (1.0 + abs(float(js @ grad)) + abs(float(js @ d)))
        if val <= tol:
            return z
    return None
