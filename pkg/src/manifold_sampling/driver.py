"""The manifold sampling trust-region method (MSG).

Each iteration builds linear models of ``F`` around ``x^k``, seeds the sample
set ``Z^k``, and then runs the manifold sampling loop: project the origin onto
the hull of the generators, take a trial step on the master model, and find a
``(z, j)`` pair on the segment ``[F(x^k), F(x^k + s^k)]``. If ``j`` is new
to ``Z^k`` the sample set grows and the loop repeats; otherwise the step is
scored with the ratio test.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    BudgetExhausted,
    ContractViolation,
    EvaluationFault,
    ManifoldSamplingError,
    RhoUndefined,
)
from .minnorm import project_origin
from .models import HESSIAN_FLOOR, MasterModel, build_models, hessian_bound, model_jacobian
from .oracle import ActivityQuery, BlackBoxMap, SelectionOracle, active_indices
from .sampling import (
    VARIANTS,
    SampleCache,
    assemble_generators,
    find_pair,
    grow_samples,
    init_samples,
    obtuse_witness,
)
from .trstep import fallback_step, solve_subproblem, sufficient_decrease_ok

logger = logging.getLogger(__name__)

SUCCESSFUL = "successful"
UNSUCCESSFUL = "unsuccessful"
ACCEPTABLE_REJECTED = "acceptable-rejected"
UNACCEPTABLE = "unacceptable"


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm parameters; ``None`` for ``delta0``/``budget`` means problem-scaled defaults.

    ``delta0`` defaults to ``0.1 max(1, ||x0||_inf)`` and ``budget`` to
    ``1000 (n + 1)`` evaluations of ``F``.
    """

    eta1: float = 0.01
    eta2: float = 1e4
    kappa_d: float = 1e-4
    gamma_dec: float = 0.5
    gamma_inc: float = 2.0
    delta0: float | None = None
    delta_max: float = 1e8
    g_tol: float = 1e-13
    delta_min: float = 1e-13
    sigma: float = 1e-8
    budget: int | None = None
    variant: str = "msg2"
    rho_grow_threshold: float = 0.5
    max_iter: int | None = None
    quadratic_models: bool = False
    bisection_iter: int = 100
    grid_levels: int = 30

    def __post_init__(self):
        checks = [
            (0 < self.eta1 < 1, "eta1 must lie in (0, 1)"),
            (self.eta2 > 0, "eta2 must be positive"),
            (0 < self.kappa_d < 1, "kappa_d must lie in (0, 1)"),
            (0 < self.gamma_dec < 1, "gamma_dec must lie in (0, 1)"),
            (self.gamma_inc >= 1, "gamma_inc must be at least 1"),
            (self.delta0 is None or self.delta0 > 0, "delta0 must be positive"),
            (self.delta0 is None or self.delta_max >= self.delta0, "delta_max must be >= delta0"),
            (self.delta_max > 0, "delta_max must be positive"),
            (self.g_tol >= 0 and self.delta_min >= 0, "tolerances must be nonnegative"),
            (self.sigma >= 0, "sigma must be nonnegative"),
            (self.budget is None or self.budget >= 0, "budget must be nonnegative"),
            (self.variant in VARIANTS, f"variant must be one of {VARIANTS}"),
            (self.max_iter is None or self.max_iter >= 0, "max_iter must be nonnegative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ContractViolation(msg)

    def resolved_delta0(self, x0) -> float:
        if self.delta0 is not None:
            return float(self.delta0)
        return min(0.1 * max(1.0, float(np.max(np.abs(x0)))), self.delta_max)

    def resolved_budget(self, n: int) -> int:
        return 1000 * (n + 1) if self.budget is None else int(self.budget)


@dataclass
class Problem:
    """``minimize h(F(x))`` from ``x0``; ``jacobian`` (p x n) is only used for benchmarking."""

    fun: Callable
    oracle: SelectionOracle
    x0: np.ndarray
    n: int
    p: int
    name: str = ""
    jacobian: Callable | None = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if self.x0.shape != (self.n,):
            raise ContractViolation(f"x0 has length {self.x0.size}, expected n={self.n}")
        if self.oracle.dimension != self.p:
            raise ContractViolation("selection dimension must equal the map's output dimension")

    def f(self, x) -> float:
        return self.oracle.combined_value(self.fun(np.asarray(x, dtype=float)))


@dataclass
class IterationRecord:
    k: int
    x: list
    delta: float
    f_value: float
    evals: int
    g_norm: float | None = None
    rho: float | None = None
    verdict: str | None = None
    loop_count: int = 0
    active_at_center: int = 0
    step_source: str | None = None
    step_norm: float | None = None
    sufficient_decrease: bool | None = None
    termination: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), allow_nan=False)


@dataclass
class SolveOutcome:
    """Result of :func:`solve`.

    ``termination`` is ``gtol_and_delta``, ``budget`` or ``maxiter``, plus
    ``delta_floor`` when the radius drops below the float spacing at ``x``
    and ``fault`` when an evaluation or internal check failed (see ``message``).
    """

    best_x: np.ndarray
    best_f: float
    records: list
    termination: str
    eval_points: np.ndarray
    eval_values: np.ndarray
    message: str = ""

    @property
    def eval_count(self) -> int:
        return len(self.eval_points)

    def summary(self) -> dict:
        return {
            "best_x": [float(v) for v in self.best_x],
            "best_f": None if not math.isfinite(self.best_f) else float(self.best_f),
            "termination": self.termination,
            "evaluations": self.eval_count,
            "iterations": len(self.records),
            "message": self.message,
        }

    def write_trace(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(rec.to_json() + "\n")

    def write_summary(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, allow_nan=False)
            fh.write("\n")


def rho_ratio(Fx, Fxs, Mx, Mxs, d) -> float:
    """Actual over predicted decrease, both measured along the weights ``d``."""
    d = np.asarray(d, dtype=float)
    den = float(np.dot(np.asarray(Mx) - np.asarray(Mxs), d))
    num = float(np.dot(np.asarray(Fx) - np.asarray(Fxs), d))
    if not den > 0 or not math.isfinite(num):
        raise RhoUndefined(f"predicted decrease {den!r} is not positive")
    return num / den


@dataclass
class SolverState:
    problem: Problem
    config: SolverConfig
    bbmap: BlackBoxMap
    x: np.ndarray
    fx: np.ndarray
    fval: float
    delta: float
    k: int = 0
    records: list = field(default_factory=list)
    pending: IterationRecord | None = None
    cache: SampleCache = field(default_factory=SampleCache)


def _delta_floor(x) -> float:
    return 8.0 * np.finfo(float).eps * max(1.0, float(np.abs(x).max()))


def _evaluate_trial(bbmap, oracle, x):
    """``F(x)`` at a trial point, or None when ``F`` or ``h(F(x))`` is not finite."""
    try:
        Fx = bbmap.evaluate(x)
    except EvaluationFault:
        return None
    with np.errstate(over="ignore", invalid="ignore"):
        if not math.isfinite(oracle.combined_value(Fx)):
            return None
    return Fx


def _jsonable(x) -> list:
    return [float(v) for v in x]


def _trial_step(models, master, d, g_norm, delta, D, config):
    g = master.gradient_at_center
    s = solve_subproblem(master, delta)
    lh = max(HESSIAN_FLOOR, float(np.linalg.norm(D, axis=0).max()))
    kh = max(HESSIAN_FLOOR, hessian_bound(models))
    # model differences are taken relative to the center to avoid cancellation
    if sufficient_decrease_ok(np.zeros(models.p), models.change(s), d, g_norm, delta,
                              config.kappa_d, lh * kh):
        return s, "subproblem"
    return fallback_step(g, delta), "fallback"


def msg_iteration(state: SolverState) -> IterationRecord:
    """One outer iteration; mutates ``state`` and returns its record.

    Raises :class:`BudgetExhausted` (with ``state`` untouched apart from the
    ledger) if ``F`` cannot be evaluated any more.
    """
    cfg, prob, bbmap = state.config, state.problem, state.bbmap
    oracle = prob.oracle
    x, fx, delta = state.x, state.fx, state.delta
    rec = IterationRecord(k=state.k, x=_jsonable(x), delta=float(delta),
                          f_value=float(state.fval), evals=bbmap.eval_count)
    state.pending = rec
    query = ActivityQuery(cfg.sigma, delta)
    rec.active_at_center = len(active_indices(oracle, fx, query))

    models = build_models(bbmap, x, delta, quadratic=cfg.quadratic_models)
    built_at = bbmap.eval_count
    Z = init_samples(cfg.variant, fx, delta, bbmap, x, oracle, query, state.cache)
    loop_cap = oracle.selection_count + 1

    rho = None
    accepted = None
    while True:
        rec.loop_count += 1
        if rec.loop_count > loop_cap:
            raise ContractViolation(f"manifold sampling loop exceeded {loop_cap} passes")
        jac = model_jacobian(models)
        D, G, _ = assemble_generators(Z, jac, oracle, state.cache)
        proj = project_origin(G, D)
        # the master model's gradient is jac d; jac d and G lam agree only up to
        # roundoff, which matters when large columns of G nearly cancel
        d = proj.d
        g = jac @ d
        g_norm = float(np.linalg.norm(g))
        rec.g_norm = g_norm
        if g_norm <= cfg.g_tol and delta <= cfg.delta_min:
            rec.termination = "gtol_and_delta"
            rec.evals = bbmap.eval_count
            return rec
        if delta >= cfg.eta2 * g_norm:
            rec.verdict = UNACCEPTABLE
            break

        master = MasterModel(weights=d, base=models, gradient_at_center=g)
        s, source = _trial_step(models, master, d, g_norm, delta, D, cfg)
        Fxs = _evaluate_trial(bbmap, oracle, x + s)
        if Fxs is None:
            rec.step_source, rec.step_norm = source, float(np.linalg.norm(s))
            rec.verdict = UNSUCCESSFUL
            break
        cert = find_pair(oracle, fx, Fxs, query, bisection_iter=cfg.bisection_iter,
                         grid_levels=cfg.grid_levels)
        known = Z.active_union
        if cert.j in known and obtuse_witness(Z, cert.j, s, jac, d, oracle) is None:
            s_fb = fallback_step(g, delta)
            if not np.array_equal(s, s_fb):
                s = s_fb
                Fxs = _evaluate_trial(bbmap, oracle, x + s)
                if Fxs is None:
                    rec.step_source, rec.step_norm = "fallback", float(np.linalg.norm(s))
                    rec.verdict = UNSUCCESSFUL
                    break
                cert = find_pair(oracle, fx, Fxs, query, bisection_iter=cfg.bisection_iter,
                                 grid_levels=cfg.grid_levels)
            source = "fallback"
        rec.step_source = source
        rec.step_norm = float(np.linalg.norm(s))
        Mx, Ms = np.zeros(models.p), models.change(s)
        rec.sufficient_decrease = sufficient_decrease_ok(
            Mx, Ms, d, g_norm, delta, cfg.kappa_d,
            max(HESSIAN_FLOOR, float(np.linalg.norm(D, axis=0).max()))
            * max(HESSIAN_FLOOR, hessian_bound(models)),
        )
        if cert.j in Z.active_union:
            try:
                rho = rho_ratio(fx, Fxs, Mx, Ms, d)
            except RhoUndefined:
                rho = -math.inf
            accepted = (s, Fxs)
            break

        grow_samples(Z, cfg.variant, cert, bbmap, x, delta, oracle, query,
                     trial_pos=bbmap.lookup(x + s), cache=state.cache)
        if bbmap.eval_count > built_at:
            models = build_models(bbmap, x, delta, quadratic=cfg.quadratic_models)
            built_at = bbmap.eval_count

    if rec.verdict in (UNACCEPTABLE, UNSUCCESSFUL):
        state.delta = cfg.gamma_dec * delta
    else:
        s, Fxs = accepted
        f_trial = oracle.combined_value(Fxs)
        rec.rho = rho if math.isfinite(rho) else None
        if rho > cfg.eta1 and f_trial < state.fval:
            rec.verdict = SUCCESSFUL
            state.x = x + s
            state.fx = Fxs
            state.fval = f_trial
            if rho > cfg.rho_grow_threshold:
                state.delta = min(cfg.gamma_inc * delta, cfg.delta_max)
        else:
            rec.verdict = ACCEPTABLE_REJECTED if rho > cfg.eta1 else UNSUCCESSFUL
            state.delta = cfg.gamma_dec * delta
    rec.evals = bbmap.eval_count
    return rec


def solve(problem: Problem, config: SolverConfig | None = None) -> SolveOutcome:
    """Run MSG from ``problem.x0`` until the tolerances are met or the budget is spent."""
    config = config or SolverConfig()
    x0 = problem.x0.copy()
    bbmap = BlackBoxMap(problem.fun, problem.n, problem.p, budget=config.resolved_budget(problem.n))

    def outcome(state, termination, message=""):
        if state is None:
            best_x, best_f = x0, math.inf
            records = []
        else:
            best_x, best_f, records = state.x.copy(), float(state.fval), state.records
        return SolveOutcome(best_x=best_x, best_f=best_f, records=records, termination=termination,
                            eval_points=bbmap.points.copy(), eval_values=bbmap.values.copy(),
                            message=message)

    try:
        fx0 = bbmap.evaluate(x0)
        f0 = problem.oracle.combined_value(fx0)
    except BudgetExhausted:
        return outcome(None, "budget")
    except (EvaluationFault, ContractViolation) as exc:
        return outcome(None, "fault", str(exc))

    state = SolverState(problem=problem, config=config, bbmap=bbmap, x=x0, fx=fx0, fval=f0,
                        delta=config.resolved_delta0(x0))
    while True:
        if config.max_iter is not None and state.k >= config.max_iter:
            state.records.append(IterationRecord(
                k=state.k, x=_jsonable(state.x), delta=float(state.delta),
                f_value=float(state.fval), evals=bbmap.eval_count, termination="maxiter"))
            return outcome(state, "maxiter")
        if state.delta < _delta_floor(state.x):
            # radius below the spacing of doubles around x: no model can be built
            state.records.append(IterationRecord(
                k=state.k, x=_jsonable(state.x), delta=float(state.delta),
                f_value=float(state.fval), evals=bbmap.eval_count, termination="delta_floor"))
            return outcome(state, "delta_floor")
        try:
            rec = msg_iteration(state)
        except BudgetExhausted:
            rec = state.pending
            rec.evals = bbmap.eval_count
            rec.termination = "budget"
            state.records.append(rec)
            return outcome(state, "budget")
        except ManifoldSamplingError as exc:
            logger.warning("run aborted at iteration %d: %s", state.k, exc)
            rec = state.pending
            rec.evals = bbmap.eval_count
            rec.termination = "fault"
            state.records.append(rec)
            return outcome(state, "fault", f"{type(exc).__name__}: {exc}")
        state.records.append(rec)
        if rec.termination == "gtol_and_delta":
            return outcome(state, "gtol_and_delta")
        state.k += 1
