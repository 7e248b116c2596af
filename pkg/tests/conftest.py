import time
from dataclasses import dataclass

import pytest

from manifold_sampling.bench.suite import default_suite, run_suite, score_runs
from manifold_sampling.driver import SolverConfig

_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def report():
    """Record one verdict line per criterion; all lines are repeated in the terminal summary."""

    def emit(name: str, ok: bool, detail: str = "") -> bool:
        line = f"{name}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        print(line)
        _REPORT.append(line)
        return ok

    return emit


@dataclass
class SuiteRun:
    sigma: float
    runs: list
    rows: list
    seconds: float


def _suite_run(sigma: float) -> SuiteRun:
    start = time.perf_counter()
    manifest = default_suite()
    runs = run_suite(manifest, ("msg1", "msg2"), SolverConfig(sigma=sigma))
    rows = score_runs(runs, manifest.tau)
    return SuiteRun(sigma, runs, rows, time.perf_counter() - start)


@pytest.fixture(scope="session")
def suite_default():
    return _suite_run(1e-8)


@pytest.fixture(scope="session")
def suite_sigma_zero():
    return _suite_run(0.0)
