"""Singularly perturbed two-point problems and their asymptotic residuals.

The family handled here is::

    eps * u'' + a(x) * u' + b(x) * u = 0,   0 < x < 1,
    u(0) = alpha,  u(1) = beta,

with ``a > 0`` so the layer sits at ``x0 = 0``.  Inside the layer the
stretched coordinate ``xi = (x - x0) / eps`` is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Callable

import numpy as np

from .autodiff import Jet2

__all__ = [
    "BoundaryLayerProblem",
    "COEFFICIENTS",
    "make_problem",
    "stretch",
    "unstretch",
    "outer_residuals",
    "inner_residual_leading",
    "inner_residual_full",
    "assemble_inner",
    "full_residual",
    "analytic_roots",
    "analytic_solution_constant",
    "analytic_jet_constant",
    "ConstantCaseOracle",
    "leading_asymptotic_oracle_constant",
]

Coefficient = Callable[[np.ndarray], np.ndarray]


def _one(x: Any) -> Any:
    return np.ones_like(np.asarray(x, dtype=np.float64))


def _x_plus_one(x: Any) -> Any:
    return np.asarray(x, dtype=np.float64) + 1.0


def _five_cos_five(x: Any) -> Any:
    return 5.0 * np.cos(5.0 * np.asarray(x, dtype=np.float64))


# name -> (a, b)
COEFFICIENTS: dict[str, tuple[Coefficient, Coefficient]] = {
    "constant": (_one, _one),
    "variable": (_x_plus_one, _five_cos_five),
}


@dataclass(frozen=True)
class BoundaryLayerProblem:
    """``eps u'' + a u' + b u = 0`` on [0, 1] with Dirichlet data."""

    name: str = "constant"
    eps: float = 1e-3
    alpha: float = 1.0
    beta: float = 2.0
    xi0: float = 20.0
    x0: float = 0.0

    def __post_init__(self) -> None:
        if self.name not in COEFFICIENTS:
            raise ValueError(f"unknown problem {self.name!r}; choose from {sorted(COEFFICIENTS)}")
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.xi0 <= 0.0:
            raise ValueError(f"xi0 must be positive, got {self.xi0}")
        a_min = float(np.min(self.a(np.linspace(0.0, 1.0, 257))))
        if a_min > 0.0 and self.x0 != 0.0:
            raise ValueError("a(x) > 0 puts the boundary layer at x0 = 0")
        if a_min <= 0.0 and self.x0 == 0.0:
            raise ValueError("a left layer needs a(x) > 0 on [0, 1]")

    def a(self, x: Any) -> Any:
        return COEFFICIENTS[self.name][0](x)

    def b(self, x: Any) -> Any:
        return COEFFICIENTS[self.name][1](x)

    @property
    def junction(self) -> float:
        """Image of the inner horizon ``xi0`` in ``x``."""
        return self.x0 + self.eps * self.xi0

    def with_bc(self, alpha: float, beta: float) -> "BoundaryLayerProblem":
        return replace(self, alpha=float(alpha), beta=float(beta))


def make_problem(name: str = "constant", **kw: Any) -> BoundaryLayerProblem:
    return BoundaryLayerProblem(name=name, **kw)


def stretch(x: Any, prob: BoundaryLayerProblem) -> Any:
    if isinstance(x, Jet2):
        return x.affine(1.0 / prob.eps, -prob.x0 / prob.eps)
    return (np.asarray(x, dtype=np.float64) - prob.x0) / prob.eps


def unstretch(xi: Any, prob: BoundaryLayerProblem) -> Any:
    return prob.x0 + prob.eps * np.asarray(xi, dtype=np.float64)


def _pt(j: Any) -> Any:
    return j.v if isinstance(j, Jet2) else j


def outer_residuals(
    prob: BoundaryLayerProblem, x: Any, u0: Jet2, u1: Jet2 | None = None, order: int = 0
) -> tuple[Any, Any]:
    """Residuals of the outer hierarchy at ``x`` (jets w.r.t. ``x``).

    ``r0 = a u0' + b u0`` and ``r1 = a u1' + b u1 + u0''``.  With ``order=1``
    the first-order term is required.
    """
    xv = _pt(x)
    a, b = prob.a(xv), prob.b(xv)
    r0 = u0.d1 * a + u0.v * b
    if u1 is None:
        if order >= 1:
            raise ValueError("first-order outer residual requested without u1")
        return r0, None
    r1 = u1.d1 * a + u1.v * b + u0.d2
    return r0, r1


def inner_residual_leading(prob: BoundaryLayerProblem, xi: Any, psi0: Jet2) -> Any:
    """``psi0'' + a(x0) psi0'`` (derivatives w.r.t. ``xi``)."""
    return psi0.d2 + psi0.d1 * float(prob.a(prob.x0))


def assemble_inner(xi: Any, u0: Jet2, uc: Jet2, u1: Jet2, eps: float) -> Jet2:
    """``u0 + eps * (xi * uc + u1)`` as a jet in ``xi``."""
    xi_jet = xi if isinstance(xi, Jet2) else Jet2(xi, 1.0, 0.0)
    return u0 + (xi_jet * uc + u1).scale(eps)


def inner_residual_full(prob: BoundaryLayerProblem, xi: Any, u: Jet2) -> Any:
    """Stretched equation ``u'' + a(x) u' + eps b(x) u`` with ``x = x0 + eps xi``."""
    x = unstretch(_pt(xi), prob)
    return u.d2 + u.d1 * prob.a(x) + u.v * (prob.eps * prob.b(x))


def full_residual(prob: BoundaryLayerProblem, x: Any, u: Jet2) -> Any:
    """Unscaled equation ``eps u'' + a u' + b u`` (jets w.r.t. ``x``)."""
    xv = _pt(x)
    return u.d2 * prob.eps + u.d1 * prob.a(xv) + u.v * prob.b(xv)


# constant-coefficient closed forms -----------------------------------------


def analytic_roots(eps: float) -> tuple[float, float]:
    """Roots of ``eps r^2 + r + 1 = 0``."""
    if eps >= 0.25:
        raise ValueError("eps >= 1/4 gives complex characteristic roots")
    disc = math.sqrt(1.0 - 4.0 * eps)
    # lam1 via the conjugate form to avoid cancellation at small eps
    lam1 = -2.0 / (1.0 + disc)
    lam2 = (-1.0 - disc) / (2.0 * eps)
    return lam1, lam2


def _analytic_terms(eps: float, alpha: float, beta: float, x: Any):
    lam1, lam2 = analytic_roots(eps)
    x = np.asarray(x, dtype=np.float64)
    # Everything divided by exp(lam1); no exponent below ever becomes positive
    # and large, so nothing overflows.
    denom = 1.0 - math.exp(lam2 - lam1)
    slow = (beta * np.exp(lam1 * (x - 1.0)) - alpha * np.exp(lam2 - lam1 + lam1 * x)) / denom
    fast = (alpha - beta * math.exp(-lam1)) * np.exp(lam2 * x) / denom
    return lam1, lam2, slow, fast


def analytic_solution_constant(eps: float, alpha: float, beta: float, x: Any) -> Any:
    """Exact solution of ``eps u'' + u' + u = 0``, ``u(0)=alpha``, ``u(1)=beta``."""
    _, _, slow, fast = _analytic_terms(eps, alpha, beta, x)
    out = slow + fast
    return float(out) if np.ndim(out) == 0 else out


def analytic_jet_constant(eps: float, alpha: float, beta: float, x: Any) -> Jet2:
    """Exact solution with its first two x-derivatives."""
    lam1, lam2, slow, fast = _analytic_terms(eps, alpha, beta, x)
    return Jet2(slow + fast, lam1 * slow + lam2 * fast, lam1**2 * slow + lam2**2 * fast)


@dataclass(frozen=True)
class ConstantCaseOracle:
    """Hand-derived matched expansions for ``a = b = 1`` with the layer at 0.

    Outer:  ``phi0 = beta e^{1-x}``, ``phi1 = beta (1-x) e^{1-x}``.
    Inner:  ``psi0 = C + D e^{-xi}`` with ``C = beta e``, ``D = alpha - C``, and
    the first-order inner term split as ``xi * uc + u1`` with
    ``uc = -C + D e^{-xi}``, ``u1 = C (1 - e^{-xi})``.
    """

    eps: float = 1e-3
    alpha: float = 1.0
    beta: float = 2.0

    @property
    def C(self) -> float:
        return self.beta * math.e

    @property
    def D(self) -> float:
        return self.alpha - self.C

    @property
    def uc_limit(self) -> float:
        return -self.C

    @property
    def u1_limit(self) -> float:
        return self.C

    def outer0(self, x: Any) -> Jet2:
        e = self.beta * np.exp(1.0 - np.asarray(x, dtype=np.float64))
        return Jet2(e, -e, e)

    def outer1(self, x: Any) -> Jet2:
        x = np.asarray(x, dtype=np.float64)
        e = self.beta * np.exp(1.0 - x)
        w = 1.0 - x
        # (w e)' = -e - w e,  (w e)'' = 2e + w e
        return Jet2(w * e, -e - w * e, 2.0 * e + w * e)

    def inner0(self, xi: Any) -> Jet2:
        e = np.exp(-np.asarray(xi, dtype=np.float64))
        return Jet2(self.C + self.D * e, -self.D * e, self.D * e)

    def inner_c(self, xi: Any) -> Jet2:
        e = np.exp(-np.asarray(xi, dtype=np.float64))
        return Jet2(-self.C + self.D * e, -self.D * e, self.D * e)

    def inner1(self, xi: Any) -> Jet2:
        e = np.exp(-np.asarray(xi, dtype=np.float64))
        return Jet2(self.C * (1.0 - e), self.C * e, -self.C * e)

    def leading_composite(self, x: Any) -> Any:
        x = np.asarray(x, dtype=np.float64)
        return self.beta * np.exp(1.0 - x) + self.D * np.exp(-x / self.eps)

    def two_term_composite(self, x: Any) -> Any:
        x = np.asarray(x, dtype=np.float64)
        xi = x / self.eps
        outer = self.outer0(x).v + self.eps * self.outer1(x).v
        inner = assemble_inner(xi, self.inner0(xi), self.inner_c(xi), self.inner1(xi), self.eps).v
        match = self.C + self.uc_limit * x + self.eps * self.u1_limit
        return outer + inner - match


def leading_asymptotic_oracle_constant(eps: float, alpha: float, beta: float, x: Any) -> Any:
    """Leading-order composite ``beta e^{1-x} + (alpha - beta e) e^{-x/eps}``."""
    return ConstantCaseOracle(eps, alpha, beta).leading_composite(x)
