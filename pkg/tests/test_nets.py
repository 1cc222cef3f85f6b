import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvdonet.autodiff import Jet2, NonFiniteError, param_gradient
from pvdonet.nets import (
    DeepOnet,
    Mlp,
    ParamLayout,
    adam_init,
    adam_step,
    deeponet_forward,
    mlp_apply,
    mlp_forward,
    mlp_forward_generic,
    mlp_init,
    param_count,
)

SMALL = (1, 8, 8, 1)


def _jet(x):
    x = np.asarray(x, dtype=np.float64)
    return Jet2(x, np.ones_like(x), np.zeros_like(x))


def test_same_seed_same_parameters():
    a = mlp_init((1, 100, 100, 1), 3)
    b = mlp_init((1, 100, 100, 1), 3)
    assert np.array_equal(a.params, b.params)


def test_glorot_bound_and_mean():
    net = mlp_init((100, 100), 0)
    W = net.params[: 100 * 100]
    limit = np.sqrt(6.0 / 200.0)
    assert limit == pytest.approx(0.1732, abs=1e-4)
    assert np.all(np.abs(W) <= limit)
    # the mean of 10^4 uniforms on +-0.1732 has sd 1e-3
    assert abs(W.mean()) <= 0.01
    assert np.all(net.params[100 * 100 :] == 0.0)


def test_zero_width_rejected():
    with pytest.raises(ValueError):
        mlp_init((1, 0, 1), 0)


def test_zero_net_is_zero_map():
    net = Mlp(SMALL, np.zeros(param_count(SMALL)))
    out = mlp_forward(net, _jet([-2.0, 0.3, 5.0]))
    for c in (out.v, out.d1, out.d2):
        assert np.all(c == 0.0)


def test_affine_net_propagates_jet():
    net = Mlp((1, 1), np.array([2.0, 1.0]))
    out = mlp_forward(net, Jet2(np.array([3.0]), np.array([1.0]), np.array([0.0])))
    assert (out.v[0], out.d1[0], out.d2[0]) == (7.0, 2.0, 0.0)


def test_random_net_against_finite_differences():
    net = mlp_init(SMALL, 11)
    x = np.linspace(-1.0, 1.0, 9)
    out = mlp_forward(net, _jet(x))
    f = lambda s: mlp_apply(net.params, net.widths, s)  # noqa: E731
    h1, h2 = 1e-6, 1e-4
    d1 = (f(x + h1) - f(x - h1)) / (2 * h1)
    d2 = (f(x + h2) - 2 * f(x) + f(x - h2)) / h2**2
    assert np.max(np.abs(out.d1 - d1) / (1 + np.abs(d1))) <= 1e-4
    assert np.max(np.abs(out.d2 - d2) / (1 + np.abs(d2))) <= 1e-4


def test_fused_pass_matches_elementary_jet_ops():
    net = mlp_init((1, 20, 20, 1), 5)
    s = _jet(np.linspace(-3, 3, 31))
    fused = mlp_forward(net, s)
    generic = mlp_forward_generic(net.params, net.widths, s)
    for a, b in zip((fused.v, fused.d1, fused.d2), (generic.v, generic.d1, generic.d2)):
        assert np.allclose(a, np.ravel(b), rtol=0, atol=1e-13)


def test_fused_parameter_gradient_matches_generic():
    widths = (1, 6, 6, 1)
    theta = mlp_init(widths, 2).params
    x = np.linspace(-1, 1, 7)

    def loss(apply):
        def f(t):
            j = apply(t, widths, _jet(x))
            return (j.v * j.v).sum() + (j.d1 * j.d2).sum()

        return f

    g_fused = param_gradient(loss(mlp_apply), theta)
    g_generic = param_gradient(loss(mlp_forward_generic), theta)
    assert np.allclose(g_fused, g_generic, rtol=0, atol=1e-12)


def test_order_one_skips_second_derivative():
    net = mlp_init(SMALL, 0)
    j = mlp_apply(net.params, net.widths, _jet([0.1, 0.2]), order=1)
    assert j.d2 is None
    full = mlp_apply(net.params, net.widths, _jet([0.1, 0.2]))
    assert np.allclose(j.d1, full.d1, rtol=0, atol=1e-15)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_forward_raises():
    net = Mlp((1, 1), np.array([np.inf, 0.0]))
    with pytest.raises(NonFiniteError):
        mlp_forward(net, _jet([1.0]))


def _onet(p, seed=0):
    return DeepOnet.init(2, (6, 6), p, seed)


def test_zero_branch_annihilates():
    net = _onet(1)
    net.branch.params[:] = 0.0
    out = deeponet_forward(net, [1.0, 2.0], _jet([0.0, 0.5, 1.0]))
    assert np.all(out.v == 0) and np.all(out.d1 == 0) and np.all(out.d2 == 0)


def test_unit_branch_returns_trunk_jet():
    net = _onet(1)
    net.branch.params[:] = 0.0
    net.branch.params[-1] = 1.0  # output bias
    z = _jet([0.0, 0.5, 1.0])
    out = deeponet_forward(net, [1.0, 2.0], z)
    t = mlp_forward(net.trunk, z)
    for a, b in zip((out.v, out.d1, out.d2), (t.v, t.d1, t.d2)):
        assert np.array_equal(a, b)


def test_sensor_length_mismatch():
    with pytest.raises(ValueError):
        deeponet_forward(_onet(3), [1.0, 2.0, 3.0], 0.5)


def test_branch_width_must_match_trunk():
    with pytest.raises(ValueError):
        DeepOnet(mlp_init((2, 4, 3), 0), mlp_init((1, 4, 5), 0))


def test_doubling_branch_doubles_output():
    net = _onet(4)
    z = _jet([0.2, 0.7])
    base = deeponet_forward(net, [0.9, 2.1], z)
    # doubling the last branch layer doubles every branch output
    W_last = net.branch.params[-(6 * 4 + 4) :]
    W_last *= 2.0
    twice = deeponet_forward(net, [0.9, 2.1], z)
    for a, b in zip((base.v, base.d1, base.d2), (twice.v, twice.d1, twice.d2)):
        assert np.allclose(2.0 * a, b, rtol=1e-15, atol=0)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_operator_superposition_in_branch_vector(seed):
    rng = np.random.default_rng(seed)
    p = 5
    trunk = mlp_init((1, 6, p), rng)
    z = _jet(rng.uniform(0, 1, 4))
    T = mlp_forward(trunk, z)
    b1, b2 = rng.standard_normal(p), rng.standard_normal(p)
    c1, c2 = rng.standard_normal(2)

    def combine(b):
        return np.stack([T.v @ b, T.d1 @ b, T.d2 @ b])

    lhs = combine(c1 * b1 + c2 * b2)
    rhs = c1 * combine(b1) + c2 * combine(b2)
    assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-13)


@given(st.floats(-10, 10), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_constant_jet_has_zero_derivatives(c, seed):
    net = mlp_init(SMALL, seed)
    out = mlp_forward(net, Jet2(np.array([c]), np.array([0.0]), np.array([0.0])))
    assert out.d1[0] == 0.0 and out.d2[0] == 0.0


@given(st.lists(st.integers(1, 30), min_size=2, max_size=6))
@settings(max_examples=50, deadline=None)
def test_parameter_count_formula(widths):
    net = mlp_init(widths, 0)
    assert net.n_params == sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


def test_layout_round_trip():
    layout = ParamLayout({"a": 3, "b": 2})
    theta = np.arange(5.0)
    parts = layout.split(theta)
    assert parts["b"].tolist() == [3.0, 4.0]
    assert np.array_equal(layout.join(parts), theta)


def test_adam_zero_gradient_is_fixed_point():
    params = np.array([1.0, -2.0])
    new, state = adam_step(adam_init(2), params, np.zeros(2))
    assert np.array_equal(new, params) and state.t == 1


def test_adam_first_step_moves_by_learning_rate():
    g = np.array([3.0, -0.5, 1e-2])
    new, _ = adam_step(adam_init(3, lr=1e-3), np.zeros(3), g)
    # bias-corrected first step is lr * g / (|g| + eps)
    assert np.allclose(np.abs(new), 1e-3 * np.abs(g) / (np.abs(g) + 1e-8), rtol=1e-12)


def test_adam_is_deterministic():
    s = adam_init(2)
    p, g = np.array([0.1, 0.2]), np.array([0.3, -0.4])
    a = adam_step(s, p, g)
    b = adam_step(s, p, g)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1].m, b[1].m)


def test_adam_rejects_bad_input():
    with pytest.raises(ValueError):
        adam_step(adam_init(2), np.zeros(2), np.zeros(3))
    with pytest.raises(NonFiniteError):
        adam_step(adam_init(2), np.zeros(2), np.array([np.nan, 0.0]))


@given(
    st.lists(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6), min_size=1, max_size=8),
    st.integers(0, 5),
)
@settings(max_examples=50, deadline=None)
def test_adam_without_momentum_is_normalised_descent(g, steps):
    g = np.array(g)
    state = adam_init(len(g), lr=1e-2, beta1=0.0, beta2=0.0)
    params = np.zeros(len(g))
    for _ in range(steps):  # history must not matter when both betas vanish
        params, state = adam_step(state, params, np.ones(len(g)))
    new, state = adam_step(state, params, g)
    assert np.allclose(new - params, -1e-2 * g / (np.abs(g) + 1e-8), rtol=1e-12, atol=0)
    assert state.t == steps + 1
