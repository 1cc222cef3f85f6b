"""Finite-difference checks of the tape gradients and the input jets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import jet_lift, value_and_grad
from .nets import mlp_apply, mlp_init
from .problems import make_problem
from .pvd_net import HIGH_NETS, flat_loss, sample_collocation
from .pvd_onet import (
    init_operators,
    observation_data,
    operator_flat_loss,
    sample_bc_family,
    sample_global_collocation,
)
from .training import TrainConfig

__all__ = ["CheckResult", "relative_error", "check_loss_gradients", "check_operator_gradients", "check_jets"]

TINY = (4, 4)  # two hidden layers of width 4


@dataclass(frozen=True)
class CheckResult:
    name: str
    trials: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(exact))), 1e-12)
    return float(np.max(np.abs(approx - exact)) / scale)


def _central(fn, theta: np.ndarray, directions: np.ndarray, h: float) -> np.ndarray:
    return np.array([(fn(theta + h * d) - fn(theta - h * d)) / (2.0 * h) for d in directions])


def check_loss_gradients(
    trials: int = 50, seed: int = 0, h: float = 1e-6, tol: float = 1e-5, problem: str = "constant"
) -> list[CheckResult]:
    """Full central-difference gradients of both point-wise losses on tiny nets."""
    rng = np.random.default_rng(seed)
    prob = make_problem(problem)
    out = []
    for variant in ("leading", "high"):
        worst = 0.0
        for _ in range(trials):
            nets = {k: mlp_init((1, *TINY, 1), rng) for k in HIGH_NETS}
            colloc = sample_collocation(prob, 16, int(rng.integers(2**31)))
            fn, theta, _ = flat_loss(variant, nets, prob, colloc)
            _, grad = value_and_grad(lambda t: fn(t)[0], theta)
            fd = _central(lambda t: fn(t)[0], theta, np.eye(theta.size), h)
            worst = max(worst, relative_error(fd, grad))
        out.append(CheckResult(f"pointwise-{variant}", trials, worst, tol))
    return out


def check_operator_gradients(
    trials: int = 5, directions: int = 4, seed: int = 0, h: float = 1e-6, tol: float = 1e-5
) -> list[CheckResult]:
    """Directional central differences for the operator losses."""
    rng = np.random.default_rng(seed)
    prob = make_problem("constant")
    cfg = TrainConfig(iterations=0, depth=2, width=4, p=4)
    family = sample_bc_family(n_train=4, n_test=1, seed=seed)
    points = {
        "leading": sample_collocation(prob, 12, seed),
        "high": sample_collocation(prob, 12, seed),
        "pi-deeponet": sample_global_collocation(24, seed),
        "data-driven": observation_data(prob, family.train, 12, seed),
    }
    out = []
    for variant, pts in points.items():
        worst = 0.0
        for _ in range(trials):
            nets = init_operators(variant, cfg, rng)
            fn, theta, _ = operator_flat_loss(variant, nets, prob, family.train, pts)
            _, grad = value_and_grad(lambda t: fn(t)[0], theta)
            dirs = rng.standard_normal((directions, theta.size))
            fd = _central(lambda t: fn(t)[0], theta, dirs, h)
            worst = max(worst, relative_error(fd, dirs @ grad))
        out.append(CheckResult(f"operator-{variant}", trials, worst, tol))
    return out


def check_jets(trials: int = 100, seed: int = 0, h: float = 1e-4, tol: float = 1e-4) -> CheckResult:
    """First and second input derivatives against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        depth = int(rng.integers(1, 4))
        width = int(rng.integers(2, 17))
        net = mlp_init((1,) + (width,) * depth + (1,), rng)
        x = rng.uniform(-2.0, 2.0, 8)
        j = mlp_apply(net.params, net.widths, jet_lift(x))
        f = lambda s: mlp_apply(net.params, net.widths, s)  # noqa: E731
        up, mid, down = f(x + h), f(x), f(x - h)
        d1 = (up - down) / (2.0 * h)
        d2 = (up - 2.0 * mid + down) / h**2
        worst = max(worst, relative_error(d1, j.d1), relative_error(d2, j.d2))
    return CheckResult("input-jets", trials, worst, tol)
