"""Full-batch Adam loop with periodic best-loss checkpoints."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .autodiff import NonFiniteError, Tensor, value_and_grad
from .nets import adam_init, adam_step

__all__ = [
    "PART_NAMES",
    "TrainConfig",
    "TrainingDiverged",
    "TrainResult",
    "LogRow",
    "adam_train",
    "part_values",
    "mean_square",
    "weighted_total",
    "checked_loss",
]

log = logging.getLogger(__name__)

LossFn = Callable[[Tensor], tuple[Tensor, dict[str, Any]]]


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser and architecture settings shared by every solver.

    ``width=None`` picks 100 for two-network methods and 40 for five-network
    ones, keeping the neuron count per hidden layer equal across methods.
    """

    iterations: int = 100_000
    lr: float = 1e-3
    checkpoint_every: int = 500
    seed: int = 0
    n_per_region: int = 200
    depth: int = 5
    width: int | None = None
    p: int = 100
    loss_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    prandtl: str = "outer"
    inner_extension: str = "clamp"

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be positive")
        if self.prandtl not in ("outer", "inner"):
            raise ValueError("prandtl must be 'outer' or 'inner'")
        if self.inner_extension not in ("clamp", "extrapolate"):
            raise ValueError("inner_extension must be 'clamp' or 'extrapolate'")
        if len(self.loss_weights) != 4:
            raise ValueError("loss_weights needs four entries (outer, inner, match, bc)")

    def hidden(self, n_nets: int) -> tuple[int, ...]:
        width = self.width if self.width is not None else (100 if n_nets <= 2 else 40)
        return (width,) * self.depth

    def rngs(self) -> tuple[int, np.random.Generator]:
        """Collocation seed and the generator used for weight init."""
        return self.seed, np.random.default_rng([self.seed, 1])


@dataclass
class LogRow:
    iteration: int
    parts: dict[str, float]
    total: float


@dataclass
class TrainResult:
    params: np.ndarray
    best_iteration: int
    best_loss: float
    log: list[LogRow] = field(default_factory=list)
    seconds: float = 0.0


class TrainingDiverged(NonFiniteError):
    """Raised when the loss or gradient stops being finite.

    ``result`` holds the last good checkpoint and the log up to that point.
    """

    def __init__(self, iteration: int, result: TrainResult):
        super().__init__(f"training diverged at iteration {iteration}", iteration)
        self.result = result


def part_values(parts: dict[str, Any]) -> dict[str, float]:
    return {k: float(v.value if isinstance(v, Tensor) else v) for k, v in parts.items()}


PART_NAMES = ("outer", "inner", "match", "bc")


def mean_square(r: Any) -> Any:
    return (r * r).mean()


def weighted_total(parts: dict[str, Any], weights) -> Any:
    """Sum of the four loss terms; unit weights add the parts unchanged."""
    total = 0.0
    for k, w in zip(PART_NAMES, weights):
        total = total + (parts[k] if w == 1.0 else parts[k] * w)
    return total


def checked_loss(total: Any, parts: dict[str, Any]) -> tuple[float, dict[str, float]]:
    """Float total and parts; raises if any of them is not finite."""
    values = part_values(parts)
    total = float(total.value if isinstance(total, Tensor) else total)
    if not all(math.isfinite(v) for v in values.values()) or not math.isfinite(total):
        raise NonFiniteError(f"non-finite loss part: {values}")
    return total, values


def adam_train(
    loss_fn: LossFn,
    theta0: np.ndarray,
    iterations: int,
    lr: float = 1e-3,
    checkpoint_every: int = 500,
    progress: Callable[[LogRow], None] | None = None,
) -> TrainResult:
    """Minimise ``loss_fn`` from ``theta0``.

    Every ``checkpoint_every`` iterations (and at the last one) the current
    parameters are logged; the checkpoint with the lowest total loss is kept,
    the earliest one on ties.
    """
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    if checkpoint_every < 1:
        raise ValueError("checkpoint_every must be positive")
    theta = np.array(theta0, dtype=np.float64)
    state = adam_init(theta.size, lr=lr)
    result = TrainResult(theta.copy(), 0, math.inf)
    start = time.perf_counter()

    for it in range(iterations + 1):
        loss, grad, parts = value_and_grad(loss_fn, theta, has_aux=True)
        if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
            result.seconds = time.perf_counter() - start
            raise TrainingDiverged(it, result)
        if it % checkpoint_every == 0 or it == iterations:
            row = LogRow(it, part_values(parts), loss)
            result.log.append(row)
            if loss < result.best_loss:
                result.params = theta.copy()
                result.best_iteration = it
                result.best_loss = loss
            if progress is not None:
                progress(row)
            log.debug("iter %d loss %.3e", it, loss)
        if it == iterations:
            break
        theta, state = adam_step(state, theta, grad)

    result.seconds = time.perf_counter() - start
    return result
