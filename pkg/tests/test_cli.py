import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from manifold_sampling.bench.suite import (
    expand_manifest,
    profile_from_results,
    read_results,
    run_suite,
    score_runs,
)
from manifold_sampling.cli import EXIT_FAULT, EXIT_INPUT, EXIT_OK, main
from manifold_sampling.driver import SolverConfig, solve
from manifold_sampling.problems import dump_toml, problem_from_table

MANIFEST = 'budget_factor = 40\ntau = 0.001\n\n[[problems]]\nmap = "rosenbrock"\nl = [4]\nseeds = [0, 1]\n'


@pytest.fixture
def abs_style(tmp_path):
    path = tmp_path / "abs-style.toml"
    path.write_text(dump_toml({"family": "l1"}))
    return path


def test_solve_spec_example(tmp_path, abs_style, capsys):
    out = tmp_path / "run"
    code = main(["solve", "--map", "rosenbrock", "--h", str(abs_style), "--variant", "msg2",
                 "--budget", "1000", "--out", str(out)])
    assert code == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    summary = json.loads((out / "summary.json").read_text())
    assert printed == summary
    assert summary["termination"] in ("gtol_and_delta", "budget", "delta_floor", "maxiter")
    assert summary["evaluations"] <= 1000
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert len(lines) == summary["iterations"]


def test_solve_is_a_thin_adapter(tmp_path, abs_style, capsys):
    main(["solve", "--map", "rosenbrock", "--h", str(abs_style), "--budget", "300",
          "--sigma", "0", "--out", str(tmp_path)])
    summary = json.loads((tmp_path / "summary.json").read_text())
    prob = problem_from_table({}, "rosenbrock", {"family": "l1"})
    direct = solve(prob, SolverConfig(budget=300, sigma=0.0))
    for key, val in direct.summary().items():
        assert summary[key] == val
    direct.write_trace(tmp_path / "direct.jsonl")
    assert (tmp_path / "direct.jsonl").read_bytes() == (tmp_path / "trace.jsonl").read_bytes()


def test_missing_file_exits_one(tmp_path, capsys):
    assert main(["solve", "--problem", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["bench", str(tmp_path / "nope.toml")]) == EXIT_INPUT
    assert main(["profile", str(tmp_path / "nope.csv")]) == EXIT_INPUT
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["solve"],
    ["solve", "--map", "rosenbrock"],
    ["solve", "--map", "rosenbrock", "--instance", "4", "--budget", "-3"],
    ["solve", "--map", "nope", "--instance", "4"],
    ["solve", "--map", "rosenbrock", "--instance", "4", "--variant", "msg9"],
    ["frobnicate"],
])
def test_bad_arguments_exit_one(argv, tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(argv + ["--out", str(tmp_path)] if argv[0] == "solve" else argv))
    assert info.value.code == EXIT_INPUT


def test_malformed_toml_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("map = [unterminated\n")
    assert main(["solve", "--problem", str(bad), "--out", str(tmp_path)]) == EXIT_INPUT


def test_fault_exits_two(tmp_path, monkeypatch, capsys):
    import manifold_sampling.cli as cli
    from manifold_sampling.driver import Problem
    from manifold_sampling.oracle import l1_norm

    def nan_problem(args):
        prob = Problem(fun=lambda x: np.full(2, np.nan), oracle=l1_norm(2), x0=[0.0, 0.0], n=2, p=2)
        return prob, {"map": "nan"}

    monkeypatch.setattr(cli, "problem_from_args", nan_problem)
    assert main(["solve", "--map", "x", "--instance", "2", "--out", str(tmp_path)]) == EXIT_FAULT
    assert json.loads((tmp_path / "summary.json").read_text())["termination"] == "fault"


def test_seed_replay_is_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["solve", "--map", "trigonometric", "--instance", "8", "--seed", "7",
                     "--budget", "200", "--out", str(tmp_path / name)]) == EXIT_OK
    for fname in ("trace.jsonl", "summary.json"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()
    main(["solve", "--map", "trigonometric", "--instance", "8", "--seed", "8",
          "--budget", "200", "--out", str(tmp_path / "c")])
    assert (tmp_path / "a" / "trace.jsonl").read_bytes() != (tmp_path / "c" / "trace.jsonl").read_bytes()


@pytest.fixture(scope="module")
def bench_csv(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench")
    (root / "m.toml").write_text(MANIFEST)
    for name in ("r1.csv", "r2.csv"):
        assert main(["bench", str(root / "m.toml"), "--out", str(root / name)]) == EXIT_OK
    return root


def test_bench_rows_and_determinism(bench_csv):
    rows = read_results(bench_csv / "r1.csv")
    assert len(rows) == 4
    assert {(r["problem_id"], r["method"]) for r in rows} == {
        (f"rosenbrock-l4-s{s}", m) for s in (0, 1) for m in ("msg1", "msg2")}
    assert (bench_csv / "r1.csv").read_bytes() == (bench_csv / "r2.csv").read_bytes()


def test_bench_is_a_thin_adapter(bench_csv):
    runs = run_suite(expand_manifest({"budget_factor": 40, "problems": [
        {"map": "rosenbrock", "l": [4], "seeds": [0, 1]}]}), ("msg1", "msg2"), SolverConfig())
    direct = score_runs(runs, 1e-3)
    for a, b in zip(direct, read_results(bench_csv / "r1.csv")):
        assert float(b["final_f"]) == a["final_f"]
        assert int(b["budget_used"]) == a["budget_used"]


def test_empty_manifest_gives_header_only(tmp_path, capsys):
    (tmp_path / "m.toml").write_text("budget_factor = 10\n")
    assert main(["bench", str(tmp_path / "m.toml"), "--out", str(tmp_path / "r.csv")]) == EXIT_OK
    text = (tmp_path / "r.csv").read_text().splitlines()
    assert len(text) == 1 and text[0].startswith("problem_id,method,n,budget_used")


def test_bench_rejects_unknown_method(bench_csv, capsys):
    assert main(["bench", str(bench_csv / "m.toml"), "--methods", "msg1,granso"]) == EXIT_INPUT


def _results_csv(path, entries):
    cols = ["problem_id", "method", "n", "budget_used", "final_f", "final_gamma",
            "solved_at_f_tau", "solved_at_gamma_tau", "tau"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for pid, t in entries:
            w.writerow([pid, "m", 2, 10, 0.0, 0.0, "" if t is None else t, "", 0.001])


def test_profile_examples_through_files(tmp_path, capsys):
    _results_csv(tmp_path / "r.csv", [("a", 3), ("b", 9)])
    out = tmp_path / "p.csv"
    assert main(["profile", str(tmp_path / "r.csv"), "--alpha", "0,1,3", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(open(out)))
    assert [float(r["fraction"]) for r in rows] == [0.0, 0.5, 1.0]
    _results_csv(tmp_path / "none.csv", [("a", None), ("b", None)])
    main(["profile", str(tmp_path / "none.csv"), "--alpha", "0,1,3", "--out", str(out)])
    assert [float(r["fraction"]) for r in csv.DictReader(open(out))] == [0.0, 0.0, 0.0]


def test_profile_matches_library(bench_csv, capsys):
    out = bench_csv / "p.csv"
    assert main(["profile", str(bench_csv / "r1.csv"), "--metric", "gamma", "--alpha-max", "40",
                 "--out", str(out)]) == EXIT_OK
    curves = profile_from_results(read_results(bench_csv / "r1.csv"), 1e-3, "gamma", np.arange(41.0))
    rows = list(csv.DictReader(open(out)))
    for method, curve in curves.items():
        got = [float(r["fraction"]) for r in rows if r["method"] == method]
        np.testing.assert_array_equal(got, curve)


def test_profile_schema_mismatch_exits_one(tmp_path, bench_csv, capsys):
    (tmp_path / "bad.csv").write_text("problem,method\nx,msg1\n")
    assert main(["profile", str(tmp_path / "bad.csv")]) == EXIT_INPUT
    assert main(["profile", str(bench_csv / "r1.csv"), "--tau", "0.1"]) == EXIT_INPUT


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "manifold_sampling", "solve", "--map", "rosenbrock",
                          "--instance", "4", "--budget", "30", "--out", str(tmp_path)],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["evaluations"] <= 30
