import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvdonet.autodiff import Jet2
from pvdonet.problems import (
    BoundaryLayerProblem,
    ConstantCaseOracle,
    analytic_jet_constant,
    analytic_roots,
    analytic_solution_constant,
    assemble_inner,
    full_residual,
    inner_residual_full,
    inner_residual_leading,
    leading_asymptotic_oracle_constant,
    make_problem,
    outer_residuals,
    stretch,
    unstretch,
)

CONST = make_problem("constant")
VAR = make_problem("variable")


def _const(c, n=1):
    return Jet2(np.full(n, float(c)), np.zeros(n), np.zeros(n))


def test_stretch_examples():
    assert stretch(0.02, CONST) == pytest.approx(20.0, abs=1e-12)
    assert stretch(CONST.x0, CONST) == 0.0
    assert CONST.junction == pytest.approx(0.02, abs=1e-15)


def test_stretch_round_trip():
    x = np.random.default_rng(0).random(1000)
    assert np.max(np.abs(unstretch(stretch(x, CONST), CONST) - x)) <= 1e-12


def test_stretch_scales_jets():
    xi = stretch(Jet2(0.0, 1.0, 0.0), CONST)
    assert (xi.v, xi.d1, xi.d2) == (0.0, 1000.0, 0.0)


def test_problem_validation():
    with pytest.raises(ValueError):
        make_problem("quadratic")
    with pytest.raises(ValueError):
        BoundaryLayerProblem(eps=0.0)
    with pytest.raises(ValueError):
        BoundaryLayerProblem(xi0=-1.0)
    with pytest.raises(ValueError):
        BoundaryLayerProblem(x0=1.0)  # a > 0 puts the layer on the left


def test_outer_residual_kernel_and_constants():
    x = np.linspace(0, 1, 11)
    e = np.exp(-x)
    r0, _ = outer_residuals(CONST, x, Jet2(e, -e, e))
    assert np.max(np.abs(r0)) == 0.0
    r0, _ = outer_residuals(CONST, 0.3, Jet2(2.0, 0.0, 0.0))
    assert r0 == 2.0
    r0, _ = outer_residuals(VAR, 0.0, Jet2(1.0, 0.0, 0.0))
    assert r0 == pytest.approx(5.0 * math.cos(0.0))


def test_outer_first_order_needs_u1():
    with pytest.raises(ValueError):
        outer_residuals(CONST, 0.5, Jet2(1.0, 0.0, 0.0), order=1)


def test_first_order_outer_forcing():
    o = ConstantCaseOracle()
    x = np.linspace(0, 1, 21)
    r0, r1 = outer_residuals(CONST, x, o.outer0(x), o.outer1(x))
    assert np.max(np.abs(r0)) < 1e-14
    assert np.max(np.abs(r1)) < 1e-13


def test_inner_leading_residual_examples():
    xi = np.linspace(0, 20, 9)
    e = np.exp(-xi)
    assert np.max(np.abs(inner_residual_leading(CONST, xi, Jet2(e, -e, e)))) == 0.0
    assert np.all(inner_residual_leading(CONST, xi, _const(3.0, 9)) == 0.0)


def test_inner_full_residual_hand_value():
    r = inner_residual_full(CONST, 1.0, Jet2(1.0, 1.0, 0.0))
    assert r == pytest.approx(1.001, abs=1e-15)


def test_constant_oracle_leading_residuals_vanish():
    o = ConstantCaseOracle()
    xi = np.linspace(0, 20, 41)
    assert np.max(np.abs(inner_residual_leading(CONST, xi, o.inner0(xi)))) < 1e-13


def test_assembled_oracle_residual_is_second_order_small():
    o = ConstantCaseOracle()
    xi = np.linspace(0, 20, 41)
    u = assemble_inner(xi, o.inner0(xi), o.inner_c(xi), o.inner1(xi), CONST.eps)
    # O(eps) and O(1) parts cancel; only eps^2 * (xi uc + u1) survives
    bound = CONST.eps**2 * np.max(np.abs(xi * o.inner_c(xi).v + o.inner1(xi).v))
    assert np.max(np.abs(inner_residual_full(CONST, xi, u))) <= bound * (1 + 1e-9)


def test_van_dyke_targets():
    o = ConstantCaseOracle()
    assert o.uc_limit == pytest.approx(-2.0 * math.e)
    assert o.u1_limit == pytest.approx(2.0 * math.e)


def test_roots_against_polynomial_solver():
    lam1, lam2 = analytic_roots(1e-3)
    ref = np.sort(np.roots([1e-3, 1.0, 1.0]).real)
    assert lam1 == pytest.approx(ref[1], rel=1e-13)
    assert lam2 == pytest.approx(ref[0], rel=1e-13)
    # the quoted values -1.001001 and -998.998999 are good to about 1e-6 only;
    # the roots are -1.0010020050... and -998.9989979949...
    assert lam1 == pytest.approx(-1.001001, abs=2e-6)
    assert lam2 == pytest.approx(-998.998999, abs=2e-6)
    assert lam1 + lam2 == pytest.approx(-1000.0, rel=1e-15)
    assert lam1 * lam2 == pytest.approx(1000.0, rel=1e-13)
    with pytest.raises(ValueError):
        analytic_roots(0.25)


def test_analytic_boundary_values_and_midpoint():
    assert analytic_solution_constant(1e-3, 1.0, 2.0, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert analytic_solution_constant(1e-3, 1.0, 2.0, 1.0) == pytest.approx(2.0, abs=1e-14)
    assert analytic_solution_constant(1e-3, 1.0, 2.0, 0.5) == pytest.approx(3.299, abs=5e-4)


def test_analytic_stays_finite_for_tiny_eps():
    u = analytic_solution_constant(1e-6, 1.0, 2.0, np.linspace(0, 1, 101))
    assert np.all(np.isfinite(u))


def test_analytic_solution_satisfies_ode():
    rng = np.random.default_rng(1)
    x = rng.random(1000)
    u = analytic_jet_constant(1e-3, 1.0, 2.0, x)
    r = full_residual(CONST, x, u)
    assert np.all(np.abs(r) <= 1e-6 * (1 + np.abs(u.v)))


def test_leading_oracle_examples():
    assert leading_asymptotic_oracle_constant(1e-3, 1.0, 2.0, 0.0) == 1.0
    assert leading_asymptotic_oracle_constant(1e-3, 1.0, 2.0, 1.0) == pytest.approx(2.0, abs=1e-15)
    x = np.linspace(0, 1, 200001)
    err = np.abs(leading_asymptotic_oracle_constant(1e-3, 1.0, 2.0, x) - analytic_solution_constant(1e-3, 1.0, 2.0, x))
    assert err.max() <= 10 * 1e-3


def test_two_term_oracle_beats_leading():
    o = ConstantCaseOracle()
    x = np.linspace(0, 1, 20001)
    exact = analytic_solution_constant(1e-3, 1.0, 2.0, x)
    lead = np.max(np.abs(o.leading_composite(x) - exact))
    two = np.max(np.abs(o.two_term_composite(x) - exact))
    assert two < lead / 10


_jets = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))


@given(_jets, _jets, _jets, st.floats(0, 20), st.floats(1e-6, 1e-2))
@settings(max_examples=100, deadline=None)
def test_full_inner_residual_is_eps_consistent(u0, uc, u1, xi, eps):
    prob = make_problem("variable", eps=eps)
    u0 = Jet2(*u0)
    zero = Jet2(0.0, 0.0, 0.0)
    full = inner_residual_full(prob, xi, assemble_inner(xi, u0, zero, zero, eps))
    leading = inner_residual_leading(prob, xi, u0)
    # a(eps xi) - a(0) = eps xi for a = x + 1, plus the eps b u term
    assert abs(full - leading) <= eps * (xi * 3 + 5 * 3) * (1 + 1e-12)

    # the first-order pieces add eps * r(w) with w = xi uc + u1, every channel
    # bounded by 3; a <= 1.2 and |b| <= 5 on this range
    full1 = inner_residual_full(prob, xi, assemble_inner(xi, u0, Jet2(*uc), Jet2(*u1), eps))
    w2 = 2 * 3 + 3 * xi + 3
    w1 = 3 + 3 * xi + 3
    w0 = 3 * xi + 3
    assert abs(full1 - full) <= eps * (w2 + 1.2 * w1 + 5 * eps * w0) * (1 + 1e-12)
