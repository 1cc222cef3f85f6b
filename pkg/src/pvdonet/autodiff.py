"""Second-order input jets and a reverse-mode tape over numpy arrays.

Two differentiation services live here:

* :class:`Jet2` carries ``(value, d/ds, d2/ds2)`` of a quantity with respect to
  one scalar input ``s``.  Residuals of second-order ODEs are assembled from
  jets, so derivatives with respect to ``x`` or the stretched variable ``xi``
  never go through finite differences.
* :class:`Tensor` records array operations on a tape; :func:`value_and_grad`
  returns the exact gradient of a scalar loss with respect to a flat parameter
  vector.

Jet components may themselves be :class:`Tensor` objects, which is how the
training losses get parameter gradients of expressions containing ``u'`` and
``u''`` (reverse accumulation over the forward jet computation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Jet2",
    "jet_lift",
    "silu",
    "sigmoid",
    "silu_derivatives",
    "value_and_grad",
    "param_gradient",
    "NonFiniteError",
]


class NonFiniteError(FloatingPointError):
    """A NaN or Inf showed up where a finite number is required."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    ndim_extra = grad.ndim - len(shape)
    if ndim_extra > 0:
        grad = grad.sum(axis=tuple(range(ndim_extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _value(x: Any) -> Any:
    return x.value if isinstance(x, Tensor) else x


class Tensor:
    """Array node on the reverse-mode tape.

    ``backward`` maps the upstream gradient to one gradient per parent (``None``
    for parents that receive nothing).  Leaves have no parents.
    """

    __slots__ = ("value", "parents", "backward_fn", "grad")
    __array_ufunc__ = None

    def __init__(
        self,
        value: Any,
        parents: Sequence["Tensor"] = (),
        backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None,
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __len__(self) -> int:
        return len(self.value)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"

    # arithmetic -------------------------------------------------------------
    def __add__(self, other: Any) -> "Tensor":
        if isinstance(other, Tensor):
            a_shape, b_shape = self.shape, other.shape
            return Tensor(
                self.value + other.value,
                (self, other),
                lambda g: (_unbroadcast(g, a_shape), _unbroadcast(g, b_shape)),
            )
        shape = self.shape
        return Tensor(self.value + other, (self,), lambda g: (_unbroadcast(g, shape),))

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return Tensor(-self.value, (self,), lambda g: (-g,))

    def __sub__(self, other: Any) -> "Tensor":
        return self + (-other)

    def __rsub__(self, other: Any) -> "Tensor":
        return (-self) + other

    def __mul__(self, other: Any) -> "Tensor":
        if isinstance(other, Tensor):
            a, b = self.value, other.value
            return Tensor(
                a * b,
                (self, other),
                lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)),
            )
        c = np.asarray(other, dtype=np.float64)
        shape = self.shape
        return Tensor(self.value * c, (self,), lambda g: (_unbroadcast(g * c, shape),))

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Tensor":
        if isinstance(other, Tensor):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=np.float64))

    def __rtruediv__(self, other: Any) -> "Tensor":
        return self.reciprocal() * other

    def reciprocal(self) -> "Tensor":
        inv = 1.0 / self.value
        return Tensor(inv, (self,), lambda g: (-g * inv * inv,))

    def square(self) -> "Tensor":
        a = self.value
        return Tensor(a * a, (self,), lambda g: (2.0 * g * a,))

    def __pow__(self, k: int) -> "Tensor":
        if k == 2:
            return self.square()
        a = self.value
        return Tensor(a**k, (self,), lambda g: (g * k * a ** (k - 1),))

    def __matmul__(self, other: Any) -> "Tensor":
        if isinstance(other, Tensor):
            a, b = self.value, other.value
            return Tensor(a @ b, (self, other), lambda g: (g @ b.T, a.T @ g))
        b = np.asarray(other, dtype=np.float64)
        return Tensor(self.value @ b, (self,), lambda g: (g @ b.T,))

    def __rmatmul__(self, other: Any) -> "Tensor":
        a = np.asarray(other, dtype=np.float64)
        return Tensor(a @ self.value, (self,), lambda g: (a.T @ g,))

    @property
    def T(self) -> "Tensor":
        return Tensor(self.value.T, (self,), lambda g: (g.T,))

    def reshape(self, *shape: int) -> "Tensor":
        old = self.shape
        return Tensor(self.value.reshape(*shape), (self,), lambda g: (g.reshape(old),))

    def __getitem__(self, idx: Any) -> "Tensor":
        shape = self.shape

        def back(g: np.ndarray) -> tuple[np.ndarray]:
            full = np.zeros(shape)
            if _needs_add_at(idx):
                np.add.at(full, idx, g)
            else:
                full[idx] = g
            return (full,)

        return Tensor(self.value[idx], (self,), back)

    def sum(self, axis: int | None = None) -> "Tensor":
        shape = self.shape
        if axis is None:
            return Tensor(self.value.sum(), (self,), lambda g: (np.broadcast_to(g, shape).copy(),))
        return Tensor(
            self.value.sum(axis=axis),
            (self,),
            lambda g: (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),),
        )

    def mean(self, axis: int | None = None) -> "Tensor":
        n = self.value.size if axis is None else self.shape[axis]
        return self.sum(axis) * (1.0 / n)

    def exp(self) -> "Tensor":
        e = np.exp(self.value)
        return Tensor(e, (self,), lambda g: (g * e,))

    def cos(self) -> "Tensor":
        a = self.value
        return Tensor(np.cos(a), (self,), lambda g: (-g * np.sin(a),))

    def sigmoid(self) -> "Tensor":
        s = _logistic(self.value)
        return Tensor(s, (self,), lambda g: (g * s * (1.0 - s),))

    # reverse sweep ----------------------------------------------------------
    def backward(self) -> None:
        if self.value.size != 1:
            raise ValueError("backward() needs a scalar output")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if id(p) not in seen:
                    stack.append((p, False))
        for node in order:
            node.grad = None
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node.backward_fn is None or node.grad is None:
                continue
            for parent, g in zip(node.parents, node.backward_fn(node.grad)):
                if g is None:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g


def _needs_add_at(idx: Any) -> bool:
    items = idx if isinstance(idx, tuple) else (idx,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def _logistic(z: Any) -> Any:
    # tanh form: no overflow for any finite z, and cheaper than expit
    return 0.5 + 0.5 * np.tanh(0.5 * z)


def sigmoid(x: Any) -> Any:
    if isinstance(x, Tensor):
        return x.sigmoid()
    return _logistic(x)


def silu_derivatives(z: np.ndarray, order: int = 2) -> tuple[np.ndarray, ...]:
    """Return ``silu(z)`` and its first ``order`` derivatives (order <= 3)."""
    z = np.asarray(z, dtype=np.float64)
    s = np.tanh(0.5 * z)
    s *= 0.5
    s += 0.5
    out = [z * s]
    if order < 1:
        return tuple(out)
    oms = 1.0 - s
    f1 = z * oms
    f1 += 1.0
    f1 *= s
    out.append(f1)
    if order < 2:
        return tuple(out)
    q = s * oms
    r = 1.0 - 2.0 * s
    zr = z * r
    f2 = zr + 2.0
    f2 *= q
    out.append(f2)
    if order >= 3:
        f3 = zr + 3.0
        f3 *= r
        zq = z * q
        zq *= 2.0
        f3 -= zq
        f3 *= q
        out.append(f3)
    return tuple(out)


@dataclass(frozen=True)
class Jet2:
    """Second-order Taylor jet ``(v, d1, d2)`` w.r.t. one scalar input.

    Components can be floats, numpy arrays (a batch of points) or
    :class:`Tensor` nodes.  Arithmetic between jets follows the sum, Leibniz
    and chain rules; plain numbers and arrays act as constants.
    """

    v: Any
    d1: Any
    d2: Any

    __array_ufunc__ = None

    @staticmethod
    def const(c: Any) -> "Jet2":
        return Jet2(c, _zeros_like(c), _zeros_like(c))

    def __add__(self, other: Any) -> "Jet2":
        if isinstance(other, Jet2):
            return Jet2(self.v + other.v, self.d1 + other.d1, self.d2 + other.d2)
        return Jet2(self.v + other, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self) -> "Jet2":
        return Jet2(-self.v, -self.d1, -self.d2)

    def __sub__(self, other: Any) -> "Jet2":
        return self + (-other)

    def __rsub__(self, other: Any) -> "Jet2":
        return (-self) + other

    def __mul__(self, other: Any) -> "Jet2":
        if isinstance(other, Jet2):
            return Jet2(
                self.v * other.v,
                self.d1 * other.v + self.v * other.d1,
                self.d2 * other.v + 2.0 * (self.d1 * other.d1) + self.v * other.d2,
            )
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c: Any) -> "Jet2":
        return Jet2(self.v * c, self.d1 * c, self.d2 * c)

    def affine(self, c: Any, shift: Any) -> "Jet2":
        """``c * self + shift`` with constant ``c`` and ``shift``."""
        return Jet2(self.v * c + shift, self.d1 * c, self.d2 * c)

    def silu(self) -> "Jet2":
        return silu(self)

    def __getitem__(self, idx: Any) -> "Jet2":
        return Jet2(*(None if c is None else c[idx] for c in (self.v, self.d1, self.d2)))

    def values(self) -> tuple[Any, Any, Any]:
        return (_value(self.v), _value(self.d1), _value(self.d2))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(c)) for c in self.values() if c is not None)


def _zeros_like(c: Any) -> Any:
    if isinstance(c, Tensor):
        return np.zeros_like(c.value)
    if np.ndim(c):
        return np.zeros_like(np.asarray(c, dtype=np.float64))
    return 0.0


def jet_lift(s: Any, is_variable: bool = True) -> Jet2:
    """Lift ``s`` into a jet: the input variable gets ``d1 = 1``."""
    if np.any(~np.isfinite(np.asarray(_value(s), dtype=np.float64))):
        raise NonFiniteError("cannot lift a non-finite value")
    if isinstance(s, Tensor) or np.ndim(s):
        base = _value(s)
        one = np.ones_like(np.asarray(base, dtype=np.float64))
        zero = np.zeros_like(one)
        return Jet2(s, one if is_variable else zero, zero)
    s = float(s)
    return Jet2(s, 1.0 if is_variable else 0.0, 0.0)


def silu(j: Jet2) -> Jet2:
    """``z * sigmoid(z)`` pushed through a jet by the second-order chain rule."""
    z = j.v
    if isinstance(z, Tensor) or any(isinstance(c, Tensor) for c in (j.d1, j.d2)):
        s = sigmoid(z)
        one_minus = 1.0 - s
        f1 = s * (z * one_minus + 1.0)
        f2 = s * one_minus * (z * (1.0 - 2.0 * s) + 2.0)
        return Jet2(z * s, f1 * j.d1, f2 * (j.d1 * j.d1) + f1 * j.d2)
    f0, f1, f2 = silu_derivatives(np.asarray(z, dtype=np.float64), order=2)
    if np.ndim(z) == 0:
        f0, f1, f2 = float(f0), float(f1), float(f2)
    return Jet2(f0, f1 * j.d1, f2 * j.d1 * j.d1 + f1 * j.d2)


def value_and_grad(
    loss_fn: Callable[[Tensor], Any], params: np.ndarray, has_aux: bool = False
) -> tuple:
    """Evaluate ``loss_fn`` on a leaf built from ``params`` and backpropagate.

    Returns ``(loss, grad)``, or ``(loss, grad, aux)`` when ``loss_fn`` returns
    a ``(loss, aux)`` pair and ``has_aux`` is set.
    """
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1:
        raise ValueError(f"params must be a flat vector, got shape {params.shape}")
    leaf = Tensor(params)
    out = loss_fn(leaf)
    loss, aux = out if has_aux else (out, None)
    if not isinstance(loss, Tensor):
        # loss independent of the parameters
        grad = np.zeros_like(params)
        value = float(np.asarray(loss))
    else:
        if loss.value.size != 1:
            raise ValueError(f"loss must be scalar, got shape {loss.shape}")
        loss.backward()
        grad = np.zeros_like(params) if leaf.grad is None else leaf.grad
        value = float(loss.value)
    if grad.shape != params.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match params {params.shape}")
    return (value, grad, aux) if has_aux else (value, grad)


def param_gradient(loss_fn: Callable[[Tensor], Tensor], params: np.ndarray) -> np.ndarray:
    """Gradient of a scalar loss with respect to the flat vector ``params``."""
    return value_and_grad(loss_fn, params)[1]
