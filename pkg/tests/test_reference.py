import numpy as np
import pytest

from pvdonet.problems import analytic_solution_constant, make_problem
from pvdonet.reference import (
    export_truth_csv,
    fdm_eval,
    fdm_residual,
    fdm_solve,
    shishkin_mesh,
    truth_function,
)

CONST = make_problem("constant")
VAR = make_problem("variable")
GRID = np.concatenate((np.linspace(0.0, 0.02, 10001), np.linspace(0.02, 1.0, 101)[1:]))


def _rel_l2(u, ref):
    return np.linalg.norm(u - ref) / np.linalg.norm(ref)


@pytest.fixture(scope="module")
def exact():
    return analytic_solution_constant(1e-3, 1.0, 2.0, GRID)


def test_fdm_matches_analytic_at_4096(exact):
    sol = fdm_solve(CONST, 4096)
    assert _rel_l2(sol(GRID), exact) <= 1e-4


def test_fdm_converges(exact):
    e1 = _rel_l2(fdm_solve(CONST, 4096)(GRID), exact)
    e2 = _rel_l2(fdm_solve(CONST, 8192)(GRID), exact)
    assert e2 < e1


def test_boundary_nodes_exact():
    sol = fdm_solve(VAR, 2048)
    assert sol.values[0] == 1.0 and sol.values[-1] == 2.0
    assert fdm_eval(sol, 0.0) == 1.0 and fdm_eval(sol, 1.0) == 2.0


def test_interpolant_hits_nodes():
    sol = fdm_solve(VAR, 2048)
    assert np.array_equal(fdm_eval(sol, sol.nodes), sol.values)


def test_interpolant_reproduces_linear_profile():
    sol = fdm_solve(CONST, 2048)
    sol.values = 3.0 * sol.nodes - 1.0
    sol.__post_init__()
    mid = 0.5 * (sol.nodes[100] + sol.nodes[101])
    assert fdm_eval(sol, mid) == pytest.approx(0.5 * (sol.values[100] + sol.values[101]), abs=1e-14)


def test_eval_outside_domain():
    sol = fdm_solve(CONST, 2048)
    with pytest.raises(ValueError):
        fdm_eval(sol, 1.5)


def test_mesh_shape():
    x, tau = shishkin_mesh(1e-3, 1.0, 4096)
    assert np.all(np.diff(x) > 0)
    assert tau == pytest.approx(2e-3 * np.log(4096))
    assert np.count_nonzero(x <= tau) == 2049
    with pytest.raises(ValueError):
        shishkin_mesh(1e-3, 1.0, 4095)


def test_too_few_nodes():
    with pytest.raises(ValueError):
        fdm_solve(CONST, 500)


@pytest.mark.parametrize("prob", [CONST, VAR], ids=["constant", "variable"])
def test_discrete_residual_is_tiny(prob):
    sol = fdm_solve(prob, 16384)
    assert np.max(np.abs(fdm_residual(prob, sol))) <= 1e-10


def test_truth_function_selects_source():
    assert truth_function(CONST)(0.5) == analytic_solution_constant(1e-3, 1.0, 2.0, 0.5)
    t = truth_function(VAR, 4096)
    assert t(0.0) == 1.0


def test_truth_export(tmp_path):
    path = tmp_path / "truth.csv"
    export_truth_csv(path, np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    lines = path.read_text().splitlines()
    assert lines == ["x,u", "0,1", "1,2"]
