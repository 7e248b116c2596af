"""Benchmark suites: manifest expansion, runs, results and profile CSVs.

A manifest is TOML::

    budget_factor = 1000      # budget = budget_factor * (n + 1)
    tau = 1e-3

    [[problems]]
    map = "rosenbrock"
    l_factors = [2, 4]        # l = factor * p  (or give `l = [...]` directly)
    seeds = [0, 1, 2]

Each (map, l, seed) tuple defines one generated problem; every method runs on
every problem.
"""

from __future__ import annotations

import csv
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..driver import Problem, SolveOutcome, SolverConfig, solve
from ..problems import read_toml
from .instances import PiecewiseQuadraticSpec, generate_instance
from .metrics import (
    ProfileTable,
    StationarityProbe,
    data_profile,
    first_solve_f,
    gamma_measure,
    record_points,
)
from .registry import get_map, registry_maps

RESULT_COLUMNS = [
    "problem_id", "method", "n", "budget_used", "final_f", "final_gamma",
    "solved_at_f_tau", "solved_at_gamma_tau", "tau",
]
PROFILE_COLUMNS = ["method", "alpha", "fraction"]


@dataclass(frozen=True)
class SuiteProblem:
    map_name: str
    l: int
    seed: int

    @property
    def problem_id(self) -> str:
        return f"{self.map_name}-l{self.l}-s{self.seed}"

    def build(self) -> tuple[Problem, PiecewiseQuadraticSpec]:
        rmap = get_map(self.map_name)
        spec = generate_instance(rmap.fun, rmap.x0, self.l, self.seed)
        prob = Problem(fun=rmap.fun, oracle=spec.oracle(), x0=rmap.x0, n=rmap.n, p=rmap.p,
                       name=self.problem_id, jacobian=rmap.jacobian)
        return prob, spec


@dataclass(frozen=True)
class Manifest:
    problems: tuple
    budget_factor: int = 1000
    tau: float = 1e-3


def expand_manifest(data: dict) -> Manifest:
    problems = []
    for entry in data.get("problems", []):
        rmap = get_map(entry["map"])
        if "l" in entry:
            ls = list(entry["l"])
        else:
            ls = [int(f) * rmap.p for f in entry.get("l_factors", [2, 4])]
        for l in ls:
            for seed in entry.get("seeds", [0]):
                problems.append(SuiteProblem(rmap.name, int(l), int(seed)))
    return Manifest(problems=tuple(problems), budget_factor=int(data.get("budget_factor", 1000)),
                    tau=float(data.get("tau", 1e-3)))


def load_manifest(path) -> Manifest:
    return expand_manifest(read_toml(path))


def default_suite(seeds=(0, 1, 2), l_factors=(2, 4)) -> Manifest:
    """6 registry maps x 2 values of l x 3 seeds = 36 problems."""
    problems = [
        SuiteProblem(name, f * rmap.p, s)
        for name, rmap in registry_maps().items()
        for f in l_factors
        for s in seeds
    ]
    return Manifest(problems=tuple(problems))


@dataclass
class RunResult:
    problem: SuiteProblem
    method: str
    n: int
    outcome: SolveOutcome
    f_evals: np.ndarray


def _run(args) -> RunResult:
    sp, method, config = args
    prob, _ = sp.build()
    out = solve(prob, config)
    f_evals = np.array([prob.oracle.combined_value(v) for v in out.eval_values])
    return RunResult(problem=sp, method=method, n=prob.n, outcome=out, f_evals=f_evals)


def method_config(base: SolverConfig, method: str, n: int, budget_factor: int) -> SolverConfig:
    return dataclasses.replace(base, variant=method, budget=budget_factor * (n + 1))


def run_suite(manifest: Manifest, methods=("msg1", "msg2"), base: SolverConfig | None = None,
              workers: int = 1) -> list[RunResult]:
    base = base or SolverConfig()
    tasks = []
    for sp in manifest.problems:
        n = get_map(sp.map_name).n
        for method in methods:
            tasks.append((sp, method, method_config(base, method, n, manifest.budget_factor)))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run, tasks))
    return [_run(t) for t in tasks]


def _gamma_at(run: RunResult, pos: int, probe: StationarityProbe) -> float:
    rmap = get_map(run.problem.map_name)
    prob, _ = run.problem.build()
    return gamma_measure(run.outcome.eval_points[pos], probe, prob.oracle, rmap.fun, rmap.jacobian)


def score_runs(runs: list[RunResult], tau: float, probe: StationarityProbe | None = None) -> list[dict]:
    """Result rows; ``f*`` is the best value any method found on each problem."""
    probe = probe or StationarityProbe()
    fstar: dict[str, float] = {}
    for run in runs:
        pid = run.problem.problem_id
        best = float(run.f_evals.min()) if run.f_evals.size else np.inf
        fstar[pid] = min(fstar.get(pid, np.inf), best)
    rows = []
    for run in runs:
        pid = run.problem.problem_id
        row = {"problem_id": pid, "method": run.method, "n": run.n,
               "budget_used": run.outcome.eval_count, "final_f": None, "final_gamma": None,
               "solved_at_f_tau": None, "solved_at_gamma_tau": None, "tau": tau}
        if run.f_evals.size:
            row["final_f"] = float(run.f_evals.min())
            row["solved_at_f_tau"] = first_solve_f(run.f_evals, fstar[pid], tau)
            rec = record_points(run.f_evals)
            cache = {}
            for pos in rec:
                cache[pos] = _gamma_at(run, pos, probe)
                if cache[pos] <= tau:
                    row["solved_at_gamma_tau"] = int(pos) + 1
                    break
            last = int(rec[-1])
            row["final_gamma"] = cache[last] if last in cache else _gamma_at(run, last, probe)
        rows.append(row)
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in RESULT_COLUMNS])


def read_results(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"results file lacks columns {sorted(missing)}")
        return list(reader)


def profile_table(rows: list[dict], tau: float, metric: str) -> ProfileTable:
    key = {"f": "solved_at_f_tau", "gamma": "solved_at_gamma_tau"}.get(metric)
    if key is None:
        raise ValueError(f"metric must be 'f' or 'gamma', got {metric!r}")
    table = ProfileTable(tau=tau, metric=metric)
    for row in rows:
        row_tau = float(row["tau"])
        if not np.isclose(row_tau, tau, rtol=1e-12, atol=0):
            raise ValueError(f"results were scored at tau={row_tau!r}, not {tau!r}")
        t = row[key]
        table.add(row["problem_id"], row["method"], int(row["n"]),
                  None if t in ("", None) else int(t))
    return table


def write_profile(curves: dict, grid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILE_COLUMNS)
        for method in sorted(curves):
            for alpha, frac in zip(grid, curves[method]):
                writer.writerow([method, repr(float(alpha)), repr(float(frac))])


def profile_from_results(rows, tau, metric, grid):
    return data_profile(profile_table(rows, tau, metric), grid)
