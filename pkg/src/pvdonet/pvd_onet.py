"""Operator versions of the matched-asymptotic solvers, plus two baselines.

Every asymptotic term becomes a DeepONet whose branch reads the boundary
pair ``(alpha, beta)`` and whose trunk reads ``x`` (outer terms) or ``xi``
(inner terms).  All functions share the same trunk collocation points, so a
loss evaluation is one (N functions x J points) block per network.

Baselines:

* ``pi-deeponet``: a single DeepONet on ``[0, 1]`` trained on the residual of
  the unscaled equation; it has to resolve the layer in ``x`` directly.
* ``data-driven``: two DeepONets fit to exact solution samples in each region,
  with piecewise prediction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .autodiff import Jet2, jet_lift
from .nets import DeepOnet, ParamLayout, deeponet_apply
from .problems import BoundaryLayerProblem, full_residual, stretch
from .pvd_net import (
    HIGH_NETS,
    LEADING_NETS,
    CollocationSets,
    high_parts,
    inner_argument,
    leading_parts,
    sample_collocation,
)
from .reference import truth_function
from .training import (
    LogRow,
    TrainConfig,
    TrainingDiverged,
    adam_train,
    checked_loss,
    mean_square,
    weighted_total,
)

__all__ = [
    "DEFAULT_BOX",
    "OPERATOR_VARIANTS",
    "BcFamily",
    "TrainedOperator",
    "sample_bc_family",
    "init_operators",
    "operator_flat_loss",
    "loss_leading_onet",
    "loss_high_onet",
    "pi_deeponet_parts",
    "pi_deeponet_loss",
    "sample_global_collocation",
    "observation_data",
    "composite_onet",
    "train_operator",
    "data_driven_fit",
]

DEFAULT_BOX = ((0.4, 1.4), (1.5, 2.5))

OPERATOR_VARIANTS = {
    "leading": LEADING_NETS,
    "high": HIGH_NETS,
    "pi-deeponet": ("global",),
    "data-driven": LEADING_NETS,
}


@dataclass(frozen=True)
class BcFamily:
    train: np.ndarray  # (N, 2) rows of (alpha, beta)
    test: np.ndarray
    box: tuple[tuple[float, float], tuple[float, float]] = DEFAULT_BOX

    def contains(self, pairs: np.ndarray) -> np.ndarray:
        pairs = np.atleast_2d(pairs)
        (a0, a1), (b0, b1) = self.box
        return (pairs[:, 0] >= a0) & (pairs[:, 0] <= a1) & (pairs[:, 1] >= b0) & (pairs[:, 1] <= b1)


def sample_bc_family(
    box=DEFAULT_BOX, n_train: int = 1000, n_test: int = 100, seed: int = 0
) -> BcFamily:
    """Uniform boundary pairs; train rows are drawn first from one stream."""
    (a0, a1), (b0, b1) = box
    if not (a0 <= a1 and b0 <= b1):
        raise ValueError(f"empty sampling box {box}")
    if n_train < 0 or n_test < 0:
        raise ValueError("sample counts must be non-negative")
    rng = np.random.default_rng([seed, 2])
    n = n_train + n_test
    pairs = np.column_stack((rng.uniform(a0, a1, n), rng.uniform(b0, b1, n)))
    return BcFamily(pairs[:n_train], pairs[n_train:], tuple(map(tuple, box)))


def init_operators(
    variant: str, config: TrainConfig, rng: np.random.Generator, n_sensors: int = 2
) -> dict[str, DeepOnet]:
    names = OPERATOR_VARIANTS[variant]
    # the single-operator baseline keeps the two-network width
    hidden = config.hidden(max(len(names), 2))
    return {k: DeepOnet.init(n_sensors, hidden, config.p, rng) for k in names}


def _operator_evaluator(params, widths, V) -> Callable[[str, np.ndarray, int], Jet2]:
    def ev(name: str, pts: np.ndarray, order: int) -> Any:
        bw, tw = widths[name]
        # order 0: plain values, no jet
        zeta = jet_lift(pts) if order else pts
        return deeponet_apply(params[name], bw, tw, V, zeta, order=max(order, 1))

    return ev


def _pairs(pairs: Any) -> np.ndarray:
    pairs = np.atleast_2d(np.asarray(pairs, dtype=np.float64))
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"expected (N, 2) boundary pairs, got shape {pairs.shape}")
    if pairs.shape[0] == 0:
        raise ValueError("no boundary pairs")
    return pairs


def pi_deeponet_parts(ev, prob: BoundaryLayerProblem, x: np.ndarray, alpha: Any, beta: Any):
    """Residual of ``eps u'' + a u' + b u`` on ``x`` and the two boundary penalties."""
    n = len(x)
    pts = np.concatenate((x, [0.0, 1.0]))
    j = ev("global", pts, 2)
    r = full_residual(prob, x, j[..., :n])
    return {
        "residual": mean_square(r),
        "bc": mean_square(j.v[..., n] - alpha) + mean_square(j.v[..., n + 1] - beta),
    }


def _data_parts(ev, obs):
    x_out, xi_in, u_out, u_in = obs
    g_out = ev("outer0", x_out, 0)
    g_in = ev("inner0", xi_in, 0)
    return {"data_outer": mean_square(g_out - u_out), "data_inner": mean_square(g_in - u_in)}


def sample_global_collocation(n: int = 400, seed: int = 0) -> np.ndarray:
    return np.random.default_rng([seed, 3]).uniform(0.0, 1.0, n)


def observation_data(prob: BoundaryLayerProblem, pairs: np.ndarray, n_obs: int, seed: int = 0):
    """Exact solution samples: ``n_obs`` uniform points per region, shared by
    every pair.  Returns ``(x_outer, xi_inner, u_outer, u_inner)``."""
    if n_obs < 1:
        raise ValueError("insufficient supervision: need at least one observation per region")
    pairs = _pairs(pairs)
    rng = np.random.default_rng([seed, 4])
    xj = prob.junction
    x_out = 1.0 - (1.0 - xj) * rng.random(n_obs)
    xi_in = rng.uniform(0.0, prob.xi0, n_obs)
    x_in = prob.x0 + prob.eps * xi_in
    u_out = np.empty((len(pairs), n_obs))
    u_in = np.empty((len(pairs), n_obs))
    for k, (alpha, beta) in enumerate(pairs):
        truth = truth_function(prob.with_bc(alpha, beta))
        u_out[k] = truth(x_out)
        u_in[k] = truth(x_in)
    return x_out, xi_in, u_out, u_in


def operator_flat_loss(
    variant: str,
    nets: Mapping[str, DeepOnet],
    prob: BoundaryLayerProblem,
    pairs: np.ndarray,
    points: Any,
    weights=(1.0, 1.0, 1.0, 1.0),
):
    """Flat-parameter loss for any operator variant; see ``pvd_net.flat_loss``.

    ``points`` is a :class:`CollocationSets` for the asymptotic variants, the
    global collocation array for ``pi-deeponet`` and the observation tuple for
    ``data-driven``.
    """
    names = OPERATOR_VARIANTS[variant]
    missing = set(names) - set(nets)
    if missing:
        raise ValueError(f"{variant} needs operators {sorted(missing)}")
    pairs = _pairs(pairs)
    nets = {k: nets[k] for k in names}
    layout = ParamLayout({k: nets[k].n_params for k in names})
    widths = {k: (nets[k].branch.widths, nets[k].trunk.widths) for k in names}
    alpha, beta = pairs[:, 0], pairs[:, 1]

    def fn(theta):
        ev = _operator_evaluator(layout.split(theta), widths, pairs)
        if variant == "leading":
            parts = leading_parts(ev, prob, points, alpha, beta)
        elif variant == "high":
            parts = high_parts(ev, prob, points, alpha, beta)
        elif variant == "pi-deeponet":
            parts = pi_deeponet_parts(ev, prob, points, alpha, beta)
            return parts["residual"] + parts["bc"], parts
        else:
            parts = _data_parts(ev, points)
            return parts["data_outer"] + parts["data_inner"], parts
        return weighted_total(parts, weights), parts

    return fn, layout.join({k: nets[k].params for k in names}), layout


def loss_leading_onet(nets, prob, pairs, colloc: CollocationSets, weights=(1.0, 1.0, 1.0, 1.0)):
    """Two-operator loss averaged over the boundary pairs, as floats."""
    fn, theta, _ = operator_flat_loss("leading", nets, prob, pairs, colloc, weights)
    return checked_loss(*fn(theta))


def loss_high_onet(nets, prob, pairs, colloc: CollocationSets, weights=(1.0, 1.0, 1.0, 1.0)):
    """Five-operator loss averaged over the boundary pairs, as floats."""
    fn, theta, _ = operator_flat_loss("high", nets, prob, pairs, colloc, weights)
    return checked_loss(*fn(theta))


def pi_deeponet_loss(net: DeepOnet, prob, pairs, x_global: np.ndarray):
    """Total and parts of the single-operator residual loss, as floats."""
    fn, theta, _ = operator_flat_loss("pi-deeponet", {"global": net}, prob, pairs, x_global)
    return checked_loss(*fn(theta))


# inference ------------------------------------------------------------------


@dataclass
class TrainedOperator:
    variant: str
    problem: BoundaryLayerProblem
    nets: dict[str, DeepOnet]
    log: list[LogRow] = field(default_factory=list)
    best_iteration: int = 0
    prandtl: str = "outer"
    box: tuple = DEFAULT_BOX
    seconds: float = 0.0
    inner_extension: str = "clamp"

    def __post_init__(self) -> None:
        if self.variant not in OPERATOR_VARIANTS:
            raise ValueError(f"unknown operator variant {self.variant!r}")
        if set(self.nets) != set(OPERATOR_VARIANTS[self.variant]):
            raise ValueError(f"{self.variant} needs operators {OPERATOR_VARIANTS[self.variant]}")

    def __call__(self, pairs: Any, x: Any) -> np.ndarray:
        return composite_onet(self, pairs, x)


def _g(op: TrainedOperator, name: str, V: np.ndarray, s: Any) -> np.ndarray:
    net = op.nets[name]
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    return deeponet_apply(net.params, net.branch.widths, net.trunk.widths, V, s)


def composite_onet(op: TrainedOperator, pairs: Any, x: Any) -> Any:
    """Prediction for boundary pairs ``(N, 2)`` (or one pair) at points ``x``.

    Returns an (N, len(x)) array, squeezed for a single pair or scalar ``x``.
    """
    single = np.ndim(pairs) == 1
    V = _pairs(pairs)
    outside = ~BcFamily(V[:0], V[:0], op.box).contains(V)
    if np.any(outside):
        warnings.warn(f"{int(outside.sum())} boundary pair(s) outside the training box", stacklevel=2)
    scalar_x = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x outside [0, 1]")
    prob = op.problem
    xi = stretch(x, prob)
    s = inner_argument(xi, prob.xi0, op.inner_extension)

    if op.variant == "pi-deeponet":
        out = _g(op, "global", V, x)
    elif op.variant == "data-driven":
        out = np.where(x <= prob.junction, _g(op, "inner0", V, xi), _g(op, "outer0", V, x))
    elif op.variant == "leading":
        if op.prandtl == "inner":
            shared = _g(op, "inner0", V, prob.xi0)
        else:
            shared = _g(op, "outer0", V, prob.x0)
        out = (_g(op, "outer0", V, x) - shared) + _g(op, "inner0", V, s)
    else:
        eps = prob.eps
        outer = _g(op, "outer0", V, x) + eps * _g(op, "outer1", V, x)
        inner = _g(op, "inner0", V, s) + eps * (xi * _g(op, "inner_c", V, s) + _g(op, "inner1", V, s))
        xi0 = prob.xi0
        match = (
            _g(op, "inner0", V, xi0)
            + _g(op, "inner_c", V, xi0) * (x - prob.x0)
            + eps * _g(op, "inner1", V, xi0)
        )
        out = outer + inner - match

    if scalar_x:
        out = out[:, 0]
    if single:
        out = out[0]
    return float(out) if np.ndim(out) == 0 else out


# training -------------------------------------------------------------------


def _fit(variant, prob, family, config, points, progress) -> TrainedOperator:
    _, rng = config.rngs()
    nets = init_operators(variant, config, rng)
    fn, theta0, layout = operator_flat_loss(
        variant, nets, prob, family.train, points, config.loss_weights
    )

    def wrap(result) -> TrainedOperator:
        best = layout.split(result.params)
        trained = {}
        for k, net in nets.items():
            nb = net.branch.n_params
            branch = type(net.branch)(net.branch.widths, best[k][:nb].copy())
            trunk = type(net.trunk)(net.trunk.widths, best[k][nb:].copy())
            trained[k] = DeepOnet(branch, trunk)
        return TrainedOperator(
            variant, prob, trained, result.log, result.best_iteration,
            config.prandtl, family.box, result.seconds, config.inner_extension,
        )

    try:
        result = adam_train(fn, theta0, config.iterations, config.lr, config.checkpoint_every, progress)
    except TrainingDiverged as exc:
        exc.model = wrap(exc.result)
        raise
    return wrap(result)


def train_operator(
    variant: str,
    prob: BoundaryLayerProblem,
    family: BcFamily,
    config: TrainConfig = TrainConfig(),
    progress: Callable[[LogRow], None] | None = None,
    n_global: int = 400,
    n_obs: int = 100,
) -> TrainedOperator:
    """Joint Adam over every operator of ``variant`` on the training pairs."""
    if variant not in OPERATOR_VARIANTS:
        raise ValueError(f"unknown operator variant {variant!r}; choose from {sorted(OPERATOR_VARIANTS)}")
    if variant == "data-driven":
        return data_driven_fit(family, prob, n_obs, config, progress)
    seed = config.rngs()[0]
    if variant == "pi-deeponet":
        points = sample_global_collocation(n_global, seed)
    else:
        points = sample_collocation(prob, config.n_per_region, seed)
    return _fit(variant, prob, family, config, points, progress)


def data_driven_fit(
    family: BcFamily,
    prob: BoundaryLayerProblem,
    n_obs: int = 100,
    config: TrainConfig = TrainConfig(),
    progress: Callable[[LogRow], None] | None = None,
) -> TrainedOperator:
    """Supervised baseline: mean-squared error on exact samples, no physics."""
    obs = observation_data(prob, family.train, n_obs, config.rngs()[0])
    return _fit("data-driven", prob, family, config, obs, progress)
