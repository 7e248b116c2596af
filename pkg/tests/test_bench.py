import numpy as np
import pytest

from manifold_sampling.bench.instances import generate_instance
from manifold_sampling.bench.metrics import (
    ProfileTable,
    StationarityProbe,
    data_profile,
    f_converged,
    first_solve_f,
    gamma_measure,
    gradient_bundle,
    record_points,
)
from manifold_sampling.bench.registry import get_map, registry_maps
from manifold_sampling.bench.suite import (
    RESULT_COLUMNS,
    Manifest,
    SuiteProblem,
    default_suite,
    expand_manifest,
    profile_from_results,
    profile_table,
    read_results,
    run_suite,
    score_runs,
    write_profile,
    write_results,
)
from manifold_sampling.driver import SolverConfig
from manifold_sampling.errors import ContractViolation
from manifold_sampling.oracle import abs_value, sum_of_squares


@pytest.mark.parametrize("name", sorted(registry_maps()))
def test_jacobians_match_central_differences(name):
    rmap = get_map(name)
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rmap.x0 + rng.uniform(-1, 1, rmap.n)
        J = rmap.jacobian(x)
        assert J.shape == (rmap.p, rmap.n)
        fd = np.zeros_like(J)
        for i in range(rmap.n):
            h = 1e-6 * max(1.0, abs(x[i]))
            e = np.zeros(rmap.n)
            e[i] = h
            fd[:, i] = (rmap.fun(x + e) - rmap.fun(x - e)) / (2 * h)
        assert np.abs(J - fd).max() <= 1e-5 * max(1.0, np.abs(J).max())


def test_registry_examples():
    assert len(registry_maps()) == 6
    np.testing.assert_array_equal(get_map("rosenbrock").fun(np.array([1.0, 1.0])), [0.0, 0.0])
    lfr = get_map("linear_full_rank")
    J = lfr.jacobian(np.zeros(3))
    for x in np.random.default_rng(1).standard_normal((3, 3)):
        np.testing.assert_array_equal(lfr.jacobian(x), J)
        np.testing.assert_allclose(lfr.fun(x), J @ x + lfr.fun(np.zeros(3)), atol=1e-14)
    with pytest.raises(KeyError):
        get_map("nope")


@pytest.mark.parametrize("name", sorted(registry_maps()))
@pytest.mark.parametrize("seed", [0, 1])
def test_instance_zero_at_secondary_points(name, seed):
    rmap = get_map(name)
    spec = generate_instance(rmap.fun, rmap.x0, 2 * rmap.p, seed)
    h = spec.oracle()
    for y in spec.points[1:]:
        assert h.combined_value(rmap.fun(y)) == pytest.approx(0.0, abs=1e-8)
    assert np.all(np.linalg.eigvalsh(spec.matrices[0]) > 0)
    assert np.all(np.linalg.eigvalsh(spec.matrices[1:]) < 0)
    assert np.all(np.abs(spec.points - rmap.x0) <= 20.0)


@pytest.mark.parametrize("seed", range(10))
def test_two_piece_instance_first_point(seed):
    rmap = get_map("rosenbrock")
    spec = generate_instance(rmap.fun, rmap.x0, 2, seed)
    h = spec.oracle()
    z1 = rmap.fun(spec.points[0])
    b1 = spec.offsets[0]
    assert b1 < 0
    assert h.value_of(0, z1) == pytest.approx(b1)
    # h_2(z_1) can exceed b_1, so h(F(y^1)) is the larger of the two, still negative
    assert h.combined_value(z1) == pytest.approx(max(b1, h.value_of(1, z1)))
    assert h.combined_value(z1) < 0


def test_instance_determinism_and_l_check():
    rmap = get_map("trigonometric")
    a = generate_instance(rmap.fun, rmap.x0, 8, 3)
    b = generate_instance(rmap.fun, rmap.x0, 8, 3)
    for field in ("centers", "matrices", "offsets", "points"):
        np.testing.assert_array_equal(getattr(a, field), getattr(b, field))
    with pytest.raises(ContractViolation):
        generate_instance(rmap.fun, rmap.x0, 1, 0)


def test_f_converged_examples():
    assert f_converged(10.0, 0.005, 0.0, 1e-3)
    assert not f_converged(10.0, 10.0, 0.0, 1e-3)
    assert f_converged(10.0, 0.0, 0.0, 0.0)


def test_gamma_smooth_region():
    fun, jac = (lambda x: x.copy()), (lambda x: np.eye(2))
    g = gamma_measure(np.array([1.0, 0.0]), StationarityProbe(), sum_of_squares(2), fun, jac)
    assert g == pytest.approx(2.0, abs=1e-3)


def test_gamma_at_abs_kink():
    fun, jac = (lambda x: x.copy()), (lambda x: np.eye(1))
    assert gamma_measure(np.array([0.0]), StationarityProbe(), abs_value(), fun, jac) <= 1e-3


def test_gamma_single_sample():
    fun = lambda x: np.array([x[0] ** 2, x[1]])  # noqa: E731
    jac = lambda x: np.array([[2 * x[0], 0.0], [0.0, 1.0]])  # noqa: E731
    probe = StationarityProbe(sample_count=1, seed=4)
    s = probe.points(np.array([0.5, 0.2]))[0]
    expected = np.linalg.norm(jac(s).T @ (2 * fun(s)))
    g = gamma_measure(np.array([0.5, 0.2]), probe, sum_of_squares(2), fun, jac)
    assert g == pytest.approx(expected, rel=1e-12)
    assert np.linalg.norm(s - [0.5, 0.2]) <= 1e-5


def test_gamma_ignores_bundle_order_and_duplicates():
    from manifold_sampling.minnorm import project_origin

    rmap = get_map("rosenbrock")
    h = generate_instance(rmap.fun, rmap.x0, 4, 0).oracle()
    x = np.array([0.3, -0.4])
    bundle = gradient_bundle(x, StationarityProbe(), h, rmap.fun, rmap.jacobian)
    base = project_origin(bundle).norm_g
    perm = np.random.default_rng(0).permutation(bundle.shape[1])
    assert project_origin(bundle[:, perm]).norm_g == pytest.approx(base, rel=1e-9)
    assert project_origin(np.hstack([bundle, bundle[:, :5]])).norm_g == pytest.approx(base, rel=1e-9)


def test_probe_validation():
    with pytest.raises(ValueError):
        StationarityProbe(sample_count=0)
    with pytest.raises(ValueError):
        StationarityProbe(radius=0.0)


def test_data_profile_step_function():
    table = ProfileTable(tau=1e-3, metric="f")
    table.add("a", "m", 2, 3)
    table.add("b", "m", 2, 9)
    grid = [0.0, 0.5, 0.99, 1.0, 2.0, 2.99, 3.0, 10.0]
    np.testing.assert_array_equal(data_profile(table, grid)["m"], [0, 0, 0, 0.5, 0.5, 0.5, 1, 1])


def test_data_profile_unsolved_and_identical():
    table = ProfileTable(tau=1e-3, metric="f")
    for prob, t in (("a", 5), ("b", None), ("c", 40)):
        table.add(prob, "one", 3, t)
        table.add(prob, "two", 3, t)
    table.add("d", "none", 1, None)
    curves = data_profile(table, np.linspace(0, 20, 41))
    np.testing.assert_array_equal(curves["one"], curves["two"])
    assert not curves["none"].any()
    for c in curves.values():
        assert np.all(np.diff(c) >= 0) and c.max() <= 1


def test_first_solve_and_records():
    f = [10.0, 12.0, 4.0, 4.0, 0.004, 3.0]
    assert first_solve_f(f, 0.0, 1e-3) == 5
    assert first_solve_f(f, -100.0, 1e-3) is None
    assert first_solve_f([], 0.0, 1e-3) is None
    assert list(record_points(f)) == [0, 2, 4]


def test_manifest_expansion():
    data = {"budget_factor": 50, "tau": 0.01,
            "problems": [{"map": "rosenbrock", "l_factors": [2], "seeds": [0, 1]},
                         {"map": "trigonometric", "l": [5]}]}
    m = expand_manifest(data)
    assert [sp.problem_id for sp in m.problems] == [
        "rosenbrock-l4-s0", "rosenbrock-l4-s1", "trigonometric-l5-s0"]
    assert (m.budget_factor, m.tau) == (50, 0.01)
    assert len(default_suite().problems) == 36
    with pytest.raises(KeyError):
        expand_manifest({"problems": [{"map": "nope"}]})


@pytest.fixture(scope="module")
def small_rows():
    m = Manifest(problems=(SuiteProblem("rosenbrock", 4, 0), SuiteProblem("trigonometric", 8, 1)),
                 budget_factor=60)
    runs = run_suite(m, ("msg1", "msg2"), SolverConfig())
    return runs, score_runs(runs, 1e-3)


def test_score_rows(small_rows):
    runs, rows = small_rows
    assert len(rows) == 4
    for run, row in zip(runs, rows):
        assert row["budget_used"] == run.outcome.eval_count <= 60 * (run.n + 1)
        assert row["final_f"] == pytest.approx(run.f_evals.min())
        assert row["final_gamma"] >= 0
    # f* is the best over both methods, so at least one method solves each problem
    for pid in {r["problem_id"] for r in rows}:
        assert any(r["solved_at_f_tau"] is not None for r in rows if r["problem_id"] == pid)


def test_results_csv_round_trip(small_rows, tmp_path):
    _, rows = small_rows
    path = tmp_path / "r.csv"
    write_results(rows, path)
    back = read_results(path)
    assert list(back[0]) == RESULT_COLUMNS
    for a, b in zip(rows, back):
        assert float(b["final_f"]) == a["final_f"]  # full round-trip precision
    grid = np.arange(0, 61.0)
    direct = profile_from_results(rows, 1e-3, "f", grid)
    via_file = profile_from_results(back, 1e-3, "f", grid)
    for m in direct:
        np.testing.assert_array_equal(direct[m], via_file[m])
    write_profile(direct, grid, tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().startswith("method,alpha,fraction\n")
    with pytest.raises(ValueError):
        profile_table(back, 0.1, "f")
    with pytest.raises(ValueError):
        profile_table(back, 1e-3, "both")
