"""Train, score and persist one experiment into a run directory.

A run directory holds::

    config.ini      full configuration
    train_log.csv   loss parts at every checkpoint
    weights.pvdw    best-checkpoint parameters
    report.csv      error metrics on the evaluation grid
    curves.csv      truth and prediction on the evaluation grid
    run.json        status, best iteration, wall time
    plot.svg        optional figure
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .config import ExperimentConfig, dump_config, load_config
from .evaluation import ErrorReport, build_eval_grid, evaluate, evaluate_operator, write_report
from .nets import DeepOnet, Mlp
from .pvd_net import TrainedModel, train
from .pvd_onet import OPERATOR_VARIANTS, BcFamily, TrainedOperator, sample_bc_family, train_operator
from .reference import truth_function
from .training import LogRow, TrainingDiverged
from .weights import WeightBundle, load_weights, save_weights

__all__ = [
    "RunOutcome",
    "run",
    "family_for",
    "model_to_bundle",
    "bundle_to_model",
    "load_run",
    "evaluate_run",
    "infer",
    "read_pairs",
    "write_log",
]

log = logging.getLogger(__name__)

Model = TrainedModel | TrainedOperator


@dataclass
class RunOutcome:
    directory: Path
    model: Model
    report: ErrorReport
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def family_for(cfg: ExperimentConfig) -> BcFamily:
    return sample_bc_family(cfg.box, cfg.n_train, cfg.n_test, cfg.seed)


def model_to_bundle(method: str, model: Model) -> WeightBundle:
    names, widths, params = [], [], []
    for name, net in model.nets.items():
        if isinstance(net, DeepOnet):
            for part in ("branch", "trunk"):
                sub = getattr(net, part)
                names.append(f"{name}/{part}")
                widths.append(tuple(sub.widths))
                params.append(sub.params)
        else:
            names.append(name)
            widths.append(tuple(net.widths))
            params.append(net.params)
    return WeightBundle(method, names, widths, params)


def bundle_to_model(bundle: WeightBundle, cfg: ExperimentConfig) -> Model:
    if bundle.method != cfg.method:
        raise ValueError(f"weights are for {bundle.method!r}, config says {cfg.method!r}")
    prob = cfg.make_problem()
    mlps = {n: Mlp(w, p) for n, w, p in zip(bundle.names, bundle.widths, bundle.params)}
    if cfg.family == "pointwise":
        return TrainedModel(
            cfg.variant, prob, mlps, prandtl=cfg.prandtl, inner_extension=cfg.inner_extension
        )
    nets = {}
    for name in OPERATOR_VARIANTS[cfg.variant]:
        nets[name] = DeepOnet(mlps[f"{name}/branch"], mlps[f"{name}/trunk"])
    return TrainedOperator(
        cfg.variant, prob, nets, prandtl=cfg.prandtl, box=cfg.box, inner_extension=cfg.inner_extension
    )


def _score(cfg: ExperimentConfig, model: Model) -> tuple[ErrorReport, np.ndarray, np.ndarray, np.ndarray]:
    """Report plus the curve (x, truth, prediction) shown in plots."""
    prob = cfg.make_problem()
    grid = build_eval_grid(prob)
    if isinstance(model, TrainedModel):
        truth = truth_function(prob)
        report = evaluate(model, prob, truth, grid, cfg.method, cfg.seed)
        return report, grid.x, truth(grid.x), model(grid.x)
    family = family_for(cfg)
    report = evaluate_operator(model, prob, family.test, grid, cfg.method, cfg.seed)
    alpha, beta = family.test[0]
    truth = truth_function(prob.with_bc(alpha, beta))
    return report, grid.x, truth(grid.x), model(family.test[0], grid.x)


def write_log(rows: list[LogRow], path: Path) -> None:
    names = list(rows[0].parts) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", *(f"loss_{n}" for n in names), "total"])
        for r in rows:
            w.writerow([r.iteration, *(f"{r.parts[n]:.17g}" for n in names), f"{r.total:.17g}"])


def _write_curves(path: Path, x, truth, pred, note: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {note}\n")
        w = csv.writer(fh)
        w.writerow(["x", "truth", "prediction"])
        for row in zip(x, truth, pred):
            w.writerow([f"{v:.17g}" for v in row])


def _train(cfg: ExperimentConfig, progress) -> Model:
    prob = cfg.make_problem()
    tc = cfg.train_config()
    if cfg.family == "pointwise":
        return train(cfg.variant, prob, tc, progress)
    return train_operator(
        cfg.variant, prob, family_for(cfg), tc, progress, n_global=cfg.n_global, n_obs=cfg.n_obs
    )


def run(cfg: ExperimentConfig, out: str | Path | None = None, plot: bool = True) -> RunOutcome:
    """Train, evaluate and write every artifact.  A diverged run still writes
    its last good checkpoint and reports ``status`` accordingly."""
    directory = Path(out or cfg.out)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.ini").write_text(dump_config(cfg))

    def progress(row: LogRow) -> None:
        log.info("iter %7d  total %.4e", row.iteration, row.total)

    status = "ok"
    try:
        model = _train(cfg, progress)
    except TrainingDiverged as exc:
        model = exc.model
        status = f"diverged at iteration {exc.iteration}"
        log.error("%s; keeping checkpoint from iteration %d", status, model.best_iteration)

    write_log(model.log, directory / "train_log.csv")
    save_weights(model_to_bundle(cfg.method, model), directory / "weights.pvdw")
    report, x, u, pred = _score(cfg, model)
    write_report(report, directory / "report.csv")
    note = f"method={cfg.method} problem={cfg.problem}"
    if cfg.family == "operator":
        alpha, beta = family_for(cfg).test[0]
        note += f" alpha={alpha:.17g} beta={beta:.17g}"
    _write_curves(directory / "curves.csv", x, u, pred, note)
    summary = {
        "status": status,
        "best_iteration": model.best_iteration,
        "seconds": round(model.seconds, 3),
    }
    (directory / "run.json").write_text(json.dumps(summary, indent=2) + "\n")
    if plot:
        try:
            from .plotting import plot_run

            plot_run(directory)
        except Exception as exc:  # plots never fail a run
            log.warning("plot skipped: %s", exc)
    return RunOutcome(directory, model, report, status)


def load_run(directory: str | Path) -> tuple[ExperimentConfig, Model]:
    directory = Path(directory)
    cfg = load_config(directory / "config.ini")
    return cfg, bundle_to_model(load_weights(directory / "weights.pvdw"), cfg)


def evaluate_run(directory: str | Path) -> ErrorReport:
    """Rebuild the report from saved config and weights."""
    cfg, model = load_run(directory)
    report = _score(cfg, model)[0]
    write_report(report, Path(directory) / "report.csv")
    return report


def read_pairs(path: str | Path) -> np.ndarray:
    """Boundary pairs, one ``alpha beta`` (comma or space separated) per line."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 2:
            raise ValueError(f"{path}:{lineno}: expected two numbers, got {line!r}")
        rows.append([float(f) for f in fields])
    if not rows:
        raise ValueError(f"{path}: no boundary pairs")
    return np.array(rows)


def infer(directory: str | Path, pairs: np.ndarray, out: str | Path, x: Any = None) -> Path:
    """Operator predictions for ``pairs`` as long-format CSV (alpha, beta, x, u)."""
    cfg, model = load_run(directory)
    if not isinstance(model, TrainedOperator):
        raise ValueError(f"{cfg.method} is not an operator method")
    x = build_eval_grid(cfg.make_problem()).x if x is None else np.asarray(x, dtype=np.float64)
    u = np.atleast_2d(model(pairs, x))
    out = Path(out)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "beta", "x", "u"])
        for (alpha, beta), row in zip(pairs, u):
            for xv, uv in zip(x, row):
                w.writerow([f"{alpha:.17g}", f"{beta:.17g}", f"{xv:.17g}", f"{uv:.17g}"])
    return out

