"""Static SVG of a run's prediction against the reference curve."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["read_curves", "curves_figure", "plot_run"]


def read_curves(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, str]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no curves at {path}")
    with open(path) as fh:
        note = fh.readline().lstrip("# ").strip()
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: no curve data")
    data = np.array(rows[1:], dtype=np.float64)
    return data[:, 0], data[:, 1], data[:, 2], note


def curves_figure(x, truth, pred, junction: float, title: str = ""):
    """Full-domain panel plus a zoom on ``[0, 2 x_j]``; two curves each."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (full, zoom) = plt.subplots(1, 2, figsize=(10, 4))
    for ax in (full, zoom):
        ax.plot(x, truth, "k-", lw=1.5, label="reference")
        ax.plot(x, pred, "r--", lw=1.2, label="prediction")
        ax.set_xlabel("x")
    full.set_xlim(0.0, 1.0)
    zoom.set_xlim(0.0, 2.0 * junction)
    full.set_ylabel("u")
    full.set_title(title, fontsize=8)
    zoom.set_title("boundary layer", fontsize=8)
    full.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def plot_run(directory: str | Path, out: str | Path | None = None, junction: float | None = None) -> Path:
    """Write the SVG for a run directory (``plot.svg`` unless ``out`` is given)."""
    import matplotlib
    import matplotlib.pyplot as plt

    directory = Path(directory)
    x, truth, pred, note = read_curves(directory / "curves.csv")
    if junction is None:
        from .config import load_config

        junction = load_config(directory / "config.ini").make_problem().junction
    out = Path(out) if out else directory / "plot.svg"

    with matplotlib.rc_context({"svg.hashsalt": "pvdonet", "svg.fonttype": "none"}):
        fig = curves_figure(x, truth, pred, junction, note)
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out
