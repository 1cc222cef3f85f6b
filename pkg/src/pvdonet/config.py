"""Experiment configuration: defaults, presets and INI round trips."""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

from .problems import BoundaryLayerProblem
from .training import TrainConfig

__all__ = ["METHODS", "PRESETS", "ExperimentConfig", "load_config", "dump_config", "parse_config"]

# method key -> (solver family, variant)
METHODS = {
    "pvdnet-leading": ("pointwise", "leading"),
    "pvdnet-high": ("pointwise", "high"),
    "blpinns": ("pointwise", "bl-pinns"),
    "pvdonet-leading": ("operator", "leading"),
    "pvdonet-high": ("operator", "high"),
    "pideeponet": ("operator", "pi-deeponet"),
    "datadriven": ("operator", "data-driven"),
}

PRESETS: dict[str, dict[str, Any]] = {
    "full": {},
    "desk": {"iterations": 20_000, "n_train": 100, "n_test": 20},
}

SECTION = "experiment"


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "constant"
    method: str = "pvdnet-leading"
    eps: float = 1e-3
    alpha: float = 1.0
    beta: float = 2.0
    xi0: float = 20.0
    alpha_min: float = 0.4
    alpha_max: float = 1.4
    beta_min: float = 1.5
    beta_max: float = 2.5
    n_train: int = 1000
    n_test: int = 100
    depth: int = 5
    width: int = 0  # 0: 100 for two-network methods, 40 for five
    p: int = 100
    iterations: int = 100_000
    checkpoint_every: int = 500
    lr: float = 1e-3
    seed: int = 0
    n_per_region: int = 200
    n_global: int = 400
    n_obs: int = 100
    w_outer: float = 1.0
    w_inner: float = 1.0
    w_match: float = 1.0
    w_bc: float = 1.0
    prandtl: str = "outer"
    inner_extension: str = "clamp"
    out: str = "runs/default"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {sorted(METHODS)}")
        if self.width < 0:
            raise ValueError("width must be non-negative")
        self.train_config()  # validates the optimiser fields
        self.make_problem()

    @property
    def family(self) -> str:
        return METHODS[self.method][0]

    @property
    def variant(self) -> str:
        return METHODS[self.method][1]

    @property
    def box(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.alpha_min, self.alpha_max), (self.beta_min, self.beta_max))

    def make_problem(self) -> BoundaryLayerProblem:
        return BoundaryLayerProblem(self.problem, self.eps, self.alpha, self.beta, self.xi0)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            iterations=self.iterations,
            lr=self.lr,
            checkpoint_every=self.checkpoint_every,
            seed=self.seed,
            n_per_region=self.n_per_region,
            depth=self.depth,
            width=self.width or None,
            p=self.p,
            loss_weights=(self.w_outer, self.w_inner, self.w_match, self.w_bc),
            prandtl=self.prandtl,
            inner_extension=self.inner_extension,
        )

    def with_preset(self, name: str) -> "ExperimentConfig":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return replace(self, **PRESETS[name])

    def updated(self, **kw: Any) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name: str, raw: str) -> Any:
    kind = _TYPES[name]
    if kind in ("int", int):
        return int(raw)
    if kind in ("float", float):
        return float(raw)
    return raw


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    if not cp.has_section(SECTION):
        raise ValueError(f"config needs an [{SECTION}] section")
    kw = {}
    for key, raw in cp.items(SECTION):
        if key not in _TYPES:
            raise ValueError(f"unknown config key {key!r}")
        kw[key] = _coerce(key, raw)
    return ExperimentConfig(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def dump_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    # repr keeps floats exact
    cp[SECTION] = {k: repr(v) if isinstance(v, float) else str(v) for k, v in dataclasses.asdict(cfg).items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
