"""Ground-truth solutions: closed form (constant case) and a layer-resolving FDM."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded

from .problems import BoundaryLayerProblem, analytic_solution_constant

__all__ = [
    "FdmSolution",
    "shishkin_mesh",
    "fdm_solve",
    "fdm_eval",
    "fdm_residual",
    "truth_function",
    "export_truth_csv",
]


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass
class FdmSolution:
    nodes: np.ndarray
    values: np.ndarray
    n_intervals: int
    tau: float
    _interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._interp = PchipInterpolator(self.nodes, self.values, extrapolate=False)

    def __call__(self, x):
        return fdm_eval(self, x)


def shishkin_mesh(eps: float, a_min: float, n: int) -> tuple[np.ndarray, float]:
    """Piecewise-uniform mesh with ``n`` intervals, half of them in ``[0, tau]``."""
    if n % 2:
        raise ValueError("the Shishkin mesh needs an even number of intervals")
    tau = min(0.5, 2.0 * eps / a_min * math.log(n))
    half = n // 2
    fine = np.linspace(0.0, tau, half + 1)
    coarse = np.linspace(tau, 1.0, half + 1)[1:]
    return np.concatenate((fine, coarse)), tau


def _assemble(prob: BoundaryLayerProblem, x: np.ndarray):
    h = np.diff(x)
    hl, hr = h[:-1], h[1:]
    xi = x[1:-1]
    a, b = prob.a(xi), prob.b(xi)
    eps = prob.eps
    s = hl + hr
    lower = 2.0 * eps / (hl * s) - a / s
    diag = -2.0 * eps / (hl * hr) + b
    upper = 2.0 * eps / (hr * s) + a / s
    return lower, diag, upper


def fdm_solve(prob: BoundaryLayerProblem, n: int = 16384) -> FdmSolution:
    """Central differences for ``eps u'' + a u' + b u = 0`` on a Shishkin mesh."""
    if n < 1000:
        raise ValueError("use at least 1000 intervals")
    a_min = float(np.min(prob.a(np.linspace(0.0, 1.0, 1025))))
    if a_min <= 0.0:
        raise ValueError("fdm_solve handles a(x) > 0 only")
    x, tau = shishkin_mesh(prob.eps, a_min, n)
    if np.count_nonzero(x <= tau) < 8:
        raise ValueError("mesh too coarse to resolve the layer")
    lower, diag, upper = _assemble(prob, x)
    m = n - 1
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    rhs = np.zeros(m)
    rhs[0] -= lower[0] * prob.alpha
    rhs[-1] -= upper[-1] * prob.beta
    try:
        interior = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    u = np.concatenate(([prob.alpha], interior, [prob.beta]))
    return FdmSolution(x, u, n, tau)


def fdm_residual(prob: BoundaryLayerProblem, sol: FdmSolution, scaled: bool = True) -> np.ndarray:
    """Discrete residual of the solved system at the interior nodes.

    Rows carry coefficients of order ``eps / h^2`` (about 1e7 in the layer), so
    by default each row is divided by its largest coefficient.
    """
    lower, diag, upper = _assemble(prob, sol.nodes)
    u = sol.values
    r = lower * u[:-2] + diag * u[1:-1] + upper * u[2:]
    if scaled:
        r = r / np.maximum(np.abs(lower), np.maximum(np.abs(diag), np.abs(upper)))
    return r


def fdm_eval(sol: FdmSolution, x):
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa < 0.0) or np.any(xa > 1.0):
        raise ValueError("x outside [0, 1]")
    out = sol._interp(xa)
    # pin nodal values bit-for-bit
    idx = np.searchsorted(sol.nodes, xa)
    idx = np.clip(idx, 0, len(sol.nodes) - 1)
    hit = sol.nodes[idx] == xa
    out = np.where(hit, sol.values[idx], out)
    return float(out) if out.ndim == 0 else out


def truth_function(prob: BoundaryLayerProblem, n: int = 16384):
    """Exact solution for the constant case, FDM interpolant otherwise."""
    if prob.name == "constant":
        return lambda x: analytic_solution_constant(prob.eps, prob.alpha, prob.beta, x)
    sol = fdm_solve(prob, n)
    return sol.__call__


def export_truth_csv(path: str | Path, x: np.ndarray, u: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"])
        for xi, ui in zip(x, u):
            w.writerow([f"{xi:.17g}", f"{ui:.17g}"])
