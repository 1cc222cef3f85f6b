"""Point-wise matched-asymptotic solvers: leading and two-term composites.

Each asymptotic term gets its own MLP.  Outer nets take ``x``; inner nets take
the stretched ``xi``.  The five-net variant splits the first-order inner term
as ``xi * uc(xi) + u1(xi)`` so the ``uc`` net can match the slope of the
leading outer term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .autodiff import Jet2, jet_lift
from .nets import Mlp, ParamLayout, mlp_apply, mlp_init
from .problems import BoundaryLayerProblem, assemble_inner, inner_residual_full, stretch
from .training import (
    PART_NAMES,
    LogRow,
    TrainConfig,
    TrainingDiverged,
    adam_train,
    checked_loss,
    mean_square,
    weighted_total,
)

__all__ = [
    "LEADING_NETS",
    "HIGH_NETS",
    "PART_NAMES",
    "CollocationSets",
    "TrainedModel",
    "sample_collocation",
    "leading_parts",
    "high_parts",
    "loss_leading",
    "loss_high",
    "flat_loss",
    "composite_leading",
    "composite_high",
    "bl_pinns_eval",
    "inner_argument",
    "init_nets",
    "train",
]

LEADING_NETS = ("outer0", "inner0")
HIGH_NETS = ("outer0", "inner0", "outer1", "inner_c", "inner1")
VARIANTS = {"leading": LEADING_NETS, "high": HIGH_NETS, "bl-pinns": LEADING_NETS}

# (name, points, order) -> jet whose last axis runs over the points
Evaluator = Callable[[str, np.ndarray, int], Jet2]


@dataclass(frozen=True)
class CollocationSets:
    outer: np.ndarray  # x in (x0, 1]
    inner: np.ndarray  # xi in [0, xi0]
    match: tuple[float, float]  # (x0, xi0)
    boundary: tuple[float, float]  # (xi = 0, x = 1)


def sample_collocation(prob: BoundaryLayerProblem, n_per_region: int = 200, seed: int = 0) -> CollocationSets:
    if n_per_region < 2:
        raise ValueError("need at least 2 points per region")
    rng = np.random.default_rng(seed)
    # (x0, 1]: flip a draw from [0, 1)
    outer = 1.0 - (1.0 - prob.x0) * rng.random(n_per_region)
    inner = rng.uniform(0.0, prob.xi0, n_per_region)
    return CollocationSets(outer, inner, (prob.x0, prob.xi0), (0.0, 1.0))


def _points(colloc: CollocationSets) -> tuple[np.ndarray, np.ndarray]:
    """Outer points then x0 and 1; inner points then xi0 and 0."""
    xo = np.concatenate((colloc.outer, [colloc.match[0], colloc.boundary[1]]))
    xi = np.concatenate((colloc.inner, [colloc.match[1], colloc.boundary[0]]))
    return xo, xi


def _take(j: Jet2, idx: Any) -> Jet2:
    return j[..., idx]


def leading_parts(
    ev: Evaluator, prob: BoundaryLayerProblem, colloc: CollocationSets, alpha: Any, beta: Any
) -> dict[str, Any]:
    """Outer, inner, matching and boundary terms of the two-net loss.

    Works for point-wise nets (scalar outputs per point) and for operators
    (a leading axis over functions, with ``alpha``/``beta`` per function).
    """
    xo, xi = _points(colloc)
    n_o, n_i = len(colloc.outer), len(colloc.inner)
    jo = ev("outer0", xo, 1)
    ji = ev("inner0", xi, 2)
    x = colloc.outer
    r_o = jo.d1[..., :n_o] * prob.a(x) + jo.v[..., :n_o] * prob.b(x)
    r_i = ji.d2[..., :n_i] + ji.d1[..., :n_i] * float(prob.a(prob.x0))
    return {
        "outer": mean_square(r_o),
        "inner": mean_square(r_i),
        "match": mean_square(jo.v[..., n_o] - ji.v[..., n_i]),
        "bc": mean_square(ji.v[..., n_i + 1] - alpha) + mean_square(jo.v[..., n_o + 1] - beta),
    }


def high_parts(
    ev: Evaluator,
    prob: BoundaryLayerProblem,
    colloc: CollocationSets,
    alpha: Any,
    beta: Any,
    split_match: bool = False,
) -> dict[str, Any]:
    """Terms of the five-net loss.  ``split_match`` also returns the three
    matching conditions separately as ``match0``, ``match1``, ``match_slope``."""
    xo, xi = _points(colloc)
    n_o, n_i = len(colloc.outer), len(colloc.inner)
    o0 = ev("outer0", xo, 2)
    o1 = ev("outer1", xo, 1)
    i0 = ev("inner0", xi, 2)
    ic = ev("inner_c", xi, 2)
    i1 = ev("inner1", xi, 2)

    x = colloc.outer
    a, b = prob.a(x), prob.b(x)
    head = slice(None, n_o)
    r0 = o0.d1[..., head] * a + o0.v[..., head] * b
    r1 = o1.d1[..., head] * a + o1.v[..., head] * b + o0.d2[..., head]

    t = slice(None, n_i)
    xi_t = colloc.inner
    u_in = assemble_inner(jet_lift(xi_t), _take(i0, t), _take(ic, t), _take(i1, t), prob.eps)
    r_in = inner_residual_full(prob, xi_t, u_in)

    m0 = mean_square(o0.v[..., n_o] - i0.v[..., n_i])
    m1 = mean_square(o1.v[..., n_o] - i1.v[..., n_i])
    ms = mean_square(o0.d1[..., n_o] - ic.v[..., n_i])
    parts = {
        "outer": mean_square(r0) + mean_square(r1),
        "inner": mean_square(r_in),
        "match": m0 + m1 + ms,
        "bc": mean_square(o1.v[..., n_o + 1])
        + mean_square(o0.v[..., n_o + 1] - beta)
        + mean_square(i1.v[..., n_i + 1])
        + mean_square(i0.v[..., n_i + 1] - alpha),
    }
    if split_match:
        parts.update(match0=m0, match1=m1, match_slope=ms)
    return parts


def _mlp_evaluator(params: Mapping[str, Any], widths: Mapping[str, tuple[int, ...]]) -> Evaluator:
    def ev(name: str, pts: np.ndarray, order: int) -> Jet2:
        return mlp_apply(params[name], widths[name], jet_lift(pts), order=order)

    return ev


def _layout(nets: Mapping[str, Mlp]) -> ParamLayout:
    return ParamLayout({k: nets[k].n_params for k in nets})


def flat_loss(
    variant: str,
    nets: Mapping[str, Mlp],
    prob: BoundaryLayerProblem,
    colloc: CollocationSets,
    weights=(1.0, 1.0, 1.0, 1.0),
):
    """Loss as a function of one flat parameter vector.

    Returns ``(fn, theta0, layout)``; ``fn(theta)`` gives ``(total, parts)`` and
    accepts an array or a :class:`Tensor`.
    """
    names = VARIANTS[variant]
    missing = set(names) - set(nets)
    if missing:
        raise ValueError(f"{variant} loss needs nets {sorted(missing)}")
    nets = {k: nets[k] for k in names}
    layout = _layout(nets)
    widths = {k: nets[k].widths for k in names}
    parts_fn = high_parts if variant == "high" else leading_parts

    def fn(theta: Any):
        ev = _mlp_evaluator(layout.split(theta), widths)
        parts = parts_fn(ev, prob, colloc, prob.alpha, prob.beta)
        return weighted_total(parts, weights), parts

    return fn, layout.join({k: nets[k].params for k in names}), layout


def loss_leading(nets, prob, colloc, weights=(1.0, 1.0, 1.0, 1.0)):
    """Total two-net loss and its four parts, as floats."""
    fn, theta, _ = flat_loss("leading", nets, prob, colloc, weights)
    return checked_loss(*fn(theta))


def loss_high(nets, prob, colloc, weights=(1.0, 1.0, 1.0, 1.0)):
    """Total five-net loss and its four parts, as floats."""
    fn, theta, _ = flat_loss("high", nets, prob, colloc, weights)
    return checked_loss(*fn(theta))


# composites -----------------------------------------------------------------


@dataclass
class TrainedModel:
    variant: str
    problem: BoundaryLayerProblem
    nets: dict[str, Mlp]
    log: list[LogRow] = field(default_factory=list)
    best_iteration: int = 0
    prandtl: str = "outer"
    seconds: float = 0.0
    # "clamp": inner nets read min(xi, xi0) when the composite is formed
    inner_extension: str = "clamp"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if set(self.nets) != set(VARIANTS[self.variant]):
            raise ValueError(f"{self.variant} needs nets {VARIANTS[self.variant]}")

    def __call__(self, x: Any) -> Any:
        if self.variant == "high":
            return composite_high(self, x)
        if self.variant == "bl-pinns":
            return bl_pinns_eval(self, x)
        return composite_leading(self, x)


def _net(model: TrainedModel, name: str, s: Any) -> np.ndarray:
    net = model.nets[name]
    return mlp_apply(net.params, net.widths, np.asarray(s, dtype=np.float64))


def _as_x(x: Any) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x outside [0, 1]")
    return x


def inner_argument(xi: Any, xi0: float, extension: str) -> Any:
    """Where the inner nets are read for the composite.

    Past the horizon the inner solution has settled to its matching value, so
    ``clamp`` holds every inner net at ``xi0`` there instead of extrapolating
    the network far outside its training interval.  The explicit ``xi``
    prefactor of the order-reduction term is never clamped.
    """
    if extension == "clamp":
        return np.minimum(xi, xi0)
    if extension == "extrapolate":
        return xi
    raise ValueError(f"unknown inner extension {extension!r}")


def _out(a: np.ndarray) -> Any:
    return float(a) if np.ndim(a) == 0 else a


def composite_leading(model: TrainedModel, x: Any) -> Any:
    """``u_o(x) + u_i(xi) - m`` with ``m`` the Prandtl term at the junction."""
    x = _as_x(x)
    prob = model.problem
    if model.prandtl == "inner":
        shared = _net(model, "inner0", prob.xi0)
    else:
        shared = _net(model, "outer0", prob.x0)
    xi = inner_argument(stretch(x, prob), prob.xi0, model.inner_extension)
    # outer minus shared first: exactly zero at x0 when the Prandtl term is outer
    return _out((_net(model, "outer0", x) - shared) + _net(model, "inner0", xi))


def composite_high(model: TrainedModel, x: Any) -> Any:
    x = _as_x(x)
    prob = model.problem
    eps = prob.eps
    xi = stretch(x, prob)
    s = inner_argument(xi, prob.xi0, model.inner_extension)
    outer = _net(model, "outer0", x) + eps * _net(model, "outer1", x)
    inner = _net(model, "inner0", s) + eps * (xi * _net(model, "inner_c", s) + _net(model, "inner1", s))
    xi0 = prob.xi0
    match = (
        _net(model, "inner0", xi0)
        + _net(model, "inner_c", xi0) * (x - prob.x0)
        + eps * _net(model, "inner1", xi0)
    )
    return _out(outer + inner - match)


def bl_pinns_eval(model: TrainedModel, x: Any) -> Any:
    """Piecewise prediction: inner net up to the junction, outer net beyond."""
    if model.variant == "high":
        raise ValueError("piecewise evaluation uses the two leading-order nets")
    x = _as_x(x)
    prob = model.problem
    inside = x <= prob.junction
    out = np.where(inside, _net(model, "inner0", stretch(x, prob)), _net(model, "outer0", x))
    return _out(out)


# training -------------------------------------------------------------------


def init_nets(variant: str, config: TrainConfig, rng: np.random.Generator) -> dict[str, Mlp]:
    names = VARIANTS[variant]
    hidden = config.hidden(len(names))
    return {k: mlp_init((1, *hidden, 1), rng) for k in names}


def train(
    variant: str,
    prob: BoundaryLayerProblem,
    config: TrainConfig = TrainConfig(),
    progress: Callable[[LogRow], None] | None = None,
) -> TrainedModel:
    """Joint Adam on all nets of ``variant``; keeps the best checkpoint.

    On divergence :class:`~pvdonet.training.TrainingDiverged` propagates with
    the last good checkpoint attached.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
    colloc_seed, rng = config.rngs()
    nets = init_nets(variant, config, rng)
    colloc = sample_collocation(prob, config.n_per_region, colloc_seed)
    loss_variant = "high" if variant == "high" else "leading"
    fn, theta0, layout = flat_loss(loss_variant, nets, prob, colloc, config.loss_weights)

    def wrap(result) -> TrainedModel:
        best = layout.split(result.params)
        trained = {k: Mlp(nets[k].widths, best[k].copy()) for k in nets}
        return TrainedModel(
            variant, prob, trained, result.log, result.best_iteration,
            config.prandtl, result.seconds, config.inner_extension,
        )

    try:
        result = adam_train(fn, theta0, config.iterations, config.lr, config.checkpoint_every, progress)
    except TrainingDiverged as exc:
        exc.model = wrap(exc.result)
        raise
    return wrap(result)
