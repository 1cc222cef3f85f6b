import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pvdonet.evaluation import (
    build_eval_grid,
    evaluate,
    evaluate_operator,
    l_inf,
    relative_l2,
    report_csv,
)
from pvdonet.problems import analytic_solution_constant, make_problem
from pvdonet.reference import truth_function

PROB = make_problem("constant")


@pytest.fixture(scope="module")
def grid():
    return build_eval_grid(PROB)


def test_grid_layout(grid):
    assert len(grid) == 10101
    assert grid.junction == pytest.approx(0.02, abs=1e-15)
    assert np.all(grid.x[grid.inner] < grid.junction)
    assert np.all(grid.x[grid.inner] >= PROB.x0)
    assert grid.x[grid.junction_index] == grid.junction
    outer = grid.region == 2
    assert outer.sum() == 100 and np.all(grid.x[outer] > grid.junction)
    assert grid.x[-1] == 1.0
    assert np.all(np.diff(grid.x) > 0)


def test_metric_examples():
    assert relative_l2([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert l_inf([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_l2([0.0, 0.0], [3.0, 4.0]) == 1.0
    assert l_inf([1.0, -2.0], [0.0, 0.0]) == 2.0


def test_metric_errors():
    with pytest.raises(ZeroDivisionError):
        relative_l2([1.0], [0.0])
    with pytest.raises(ValueError):
        l_inf([1.0, 2.0], [1.0])


vectors = arrays(np.float64, 16, elements=st.floats(-100, 100))


@given(vectors, vectors, st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3))
@settings(max_examples=100, deadline=None)
def test_relative_l2_scale_invariant(pred, truth, c):
    if np.linalg.norm(truth) < 1e-3:
        return
    a = relative_l2(pred, truth)
    b = relative_l2(c * pred, c * truth)
    assert b == pytest.approx(a, rel=1e-12, abs=1e-300)


@given(arrays(np.float64, 10101, elements=st.floats(-1, 1)))
@settings(max_examples=20, deadline=None)
def test_max_dominates_junction(noise):
    grid = build_eval_grid(PROB)
    u = truth_function(PROB)(grid.x)
    r = evaluate(lambda x: u + noise, PROB, grid=grid)
    assert r[("global", "linf")] >= r[("junction", "abs_error")]


def test_perfect_surrogate_scores_zero(grid):
    r = evaluate(lambda x: analytic_solution_constant(1e-3, 1.0, 2.0, x), PROB, grid=grid)
    assert all(v == 0.0 for v in r.metrics.values())


def test_report_format_and_determinism(grid):
    u = truth_function(PROB)
    r1 = evaluate(lambda x: u(x) + 1e-3 * x, PROB, grid=grid, method="m", seed=4)
    r2 = evaluate(lambda x: u(x) + 1e-3 * x, PROB, grid=grid, method="m", seed=4)
    text = report_csv(r1)
    assert text == report_csv(r2)
    lines = text.splitlines()
    assert lines[0] == "# junction point x_j = x0 + eps * xi0 = 0.02"
    assert lines[1] == "method,problem,seed,region,metric,value"
    assert lines[2].startswith("m,constant,4,global,rel_l2,")
    assert len(lines) == 2 + 5
    # 17 significant digits reproduce the float exactly
    value = float(lines[3].rsplit(",", 1)[1])
    assert value == r1[("global", "linf")]


def test_operator_report_means(grid):
    pairs = np.column_stack((np.linspace(0.4, 1.4, 100), np.linspace(1.5, 2.5, 100)))

    def predict(p, x):
        return np.stack([analytic_solution_constant(1e-3, a, b, x) * (1 + 1e-3 * k) for k, (a, b) in enumerate(p)])

    r = evaluate_operator(predict, PROB, pairs, grid)
    assert len(r.per_pair) == 100
    for key, value in r.metrics.items():
        assert value == pytest.approx(np.mean([m[key] for m in r.per_pair]), rel=1e-15)
        assert value >= 0
    assert r.per_pair[0][("global", "rel_l2")] == 0.0
    assert r.per_pair[10][("global", "rel_l2")] == pytest.approx(1e-2, rel=1e-12)
    text = report_csv(r).splitlines()
    assert text[2].split(",")[4] == "mean_rel_l2"
    assert any(",global@pair0099," in line for line in text)
    assert len(text) == 2 + 5 + 100 * 5


def test_operator_report_needs_pairs(grid):
    with pytest.raises(ValueError):
        evaluate_operator(lambda p, x: x, PROB, np.zeros((0, 2)), grid)
