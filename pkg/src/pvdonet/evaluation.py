"""Error metrics on a layer-resolving grid, and the CSV report format."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .problems import BoundaryLayerProblem
from .reference import truth_function

__all__ = [
    "EvalGrid",
    "ErrorReport",
    "METRICS",
    "build_eval_grid",
    "relative_l2",
    "l_inf",
    "grid_metrics",
    "evaluate",
    "evaluate_operator",
    "report_csv",
    "write_report",
]

INNER, JUNCTION, OUTER = 0, 1, 2

# (region, metric) pairs in report order
METRICS = (
    ("global", "rel_l2"),
    ("global", "linf"),
    ("inner", "rel_l2"),
    ("inner", "linf"),
    ("junction", "abs_error"),
)


@dataclass(frozen=True)
class EvalGrid:
    x: np.ndarray
    region: np.ndarray  # INNER / JUNCTION / OUTER per point
    junction: float

    @property
    def inner(self) -> np.ndarray:
        return self.region == INNER

    @property
    def junction_index(self) -> int:
        return int(np.flatnonzero(self.region == JUNCTION)[0])

    def __len__(self) -> int:
        return self.x.size


def build_eval_grid(prob: BoundaryLayerProblem, n_inner: int = 10_000, n_outer: int = 100) -> EvalGrid:
    """``n_inner`` points on ``[x0, xj)``, the junction ``xj``, ``n_outer`` on ``(xj, 1]``."""
    xj = prob.junction
    inner = np.linspace(prob.x0, xj, n_inner + 1)[:-1]
    outer = np.linspace(xj, 1.0, n_outer + 1)[1:]
    x = np.concatenate((inner, [xj], outer))
    region = np.concatenate(
        (np.full(n_inner, INNER), [JUNCTION], np.full(n_outer, OUTER))
    ).astype(np.int8)
    return EvalGrid(x, region, xj)


def relative_l2(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {truth.shape}")
    norm = np.linalg.norm(truth)
    if norm == 0.0:
        raise ZeroDivisionError("relative error against an all-zero truth")
    return float(np.linalg.norm(pred - truth) / norm)


def l_inf(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {truth.shape}")
    return float(np.max(np.abs(pred - truth)))


def grid_metrics(pred: np.ndarray, truth: np.ndarray, grid: EvalGrid) -> dict[tuple[str, str], float]:
    inner = grid.inner
    j = grid.junction_index
    return {
        ("global", "rel_l2"): relative_l2(pred, truth),
        ("global", "linf"): l_inf(pred, truth),
        ("inner", "rel_l2"): relative_l2(pred[inner], truth[inner]),
        ("inner", "linf"): l_inf(pred[inner], truth[inner]),
        ("junction", "abs_error"): float(abs(pred[j] - truth[j])),
    }


@dataclass
class ErrorReport:
    method: str
    problem: str
    seed: int
    junction: float
    metrics: dict[tuple[str, str], float]
    per_pair: list[dict[tuple[str, str], float]] = field(default_factory=list)
    pairs: np.ndarray | None = None

    def __getitem__(self, key: tuple[str, str]) -> float:
        return self.metrics[key]


def evaluate(
    predict: Callable[[np.ndarray], np.ndarray],
    prob: BoundaryLayerProblem,
    truth: Callable[[np.ndarray], np.ndarray] | None = None,
    grid: EvalGrid | None = None,
    method: str = "model",
    seed: int = 0,
) -> ErrorReport:
    """Score a point-wise predictor.  Truth defaults to the closed form for the
    constant case and the fine-mesh FDM otherwise."""
    grid = grid or build_eval_grid(prob)
    truth = truth or truth_function(prob)
    if not callable(truth):
        raise TypeError("truth must be callable")
    pred = np.asarray(predict(grid.x), dtype=np.float64)
    u = np.asarray(truth(grid.x), dtype=np.float64)
    return ErrorReport(method, prob.name, seed, grid.junction, grid_metrics(pred, u, grid))


def evaluate_operator(
    predict: Callable[[np.ndarray, np.ndarray], np.ndarray],
    prob: BoundaryLayerProblem,
    pairs: np.ndarray,
    grid: EvalGrid | None = None,
    method: str = "operator",
    seed: int = 0,
    truth: Callable[[BoundaryLayerProblem], Callable] = truth_function,
) -> ErrorReport:
    """Score an operator over test boundary data ``pairs`` (N, 2).

    ``predict(pairs, x)`` returns an (N, len(x)) array.  Reported metrics are
    arithmetic means of the per-pair values.
    """
    grid = grid or build_eval_grid(prob)
    pairs = np.atleast_2d(np.asarray(pairs, dtype=np.float64))
    if pairs.shape[0] == 0:
        raise ValueError("no test pairs")
    pred = np.asarray(predict(pairs, grid.x), dtype=np.float64)
    per_pair = []
    for k, (alpha, beta) in enumerate(pairs):
        u = np.asarray(truth(prob.with_bc(alpha, beta))(grid.x), dtype=np.float64)
        per_pair.append(grid_metrics(pred[k], u, grid))
    means = {key: float(np.mean([m[key] for m in per_pair])) for key in per_pair[0]}
    return ErrorReport(method, prob.name, seed, grid.junction, means, per_pair, pairs)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def report_csv(report: ErrorReport) -> str:
    """Long-format CSV; per-pair rows follow the means for operator runs."""
    buf = io.StringIO()
    buf.write(f"# junction point x_j = x0 + eps * xi0 = {_fmt(report.junction)}\n")
    buf.write("method,problem,seed,region,metric,value\n")
    head = f"{report.method},{report.problem},{report.seed}"
    mean_prefix = "mean_" if report.per_pair else ""
    for region, metric in METRICS:
        value = report.metrics[(region, metric)]
        buf.write(f"{head},{region},{mean_prefix}{metric},{_fmt(value)}\n")
    for k, m in enumerate(report.per_pair):
        for region, metric in METRICS:
            buf.write(f"{head},{region}@pair{k:04d},{metric},{_fmt(m[(region, metric)])}\n")
    return buf.getvalue()


def write_report(report: ErrorReport, path: str | Path) -> None:
    Path(path).write_text(report_csv(report))

