"""Fully connected networks, branch/trunk operator networks and Adam.

Parameters of every network live in one flat float64 vector laid out layer by
layer as ``W (fan_in x fan_out, row-major)`` followed by ``b (fan_out)``.  The
jet forward pass through an MLP is a single tape node whose backward pass is
written out by hand; :func:`mlp_forward_generic` builds the same computation
from elementary jet operations and exists as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ._kernels import silu_jet, silu_jet_vjp, silu_values
from .autodiff import Jet2, NonFiniteError, Tensor, silu

__all__ = [
    "Mlp",
    "DeepOnet",
    "AdamState",
    "ParamLayout",
    "param_count",
    "glorot_init",
    "mlp_init",
    "mlp_apply",
    "mlp_forward",
    "mlp_forward_generic",
    "deeponet_apply",
    "deeponet_forward",
    "adam_init",
    "adam_step",
]


def param_count(widths: Sequence[int]) -> int:
    return sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


def _check_widths(widths: Sequence[int]) -> tuple[int, ...]:
    widths = tuple(int(w) for w in widths)
    if len(widths) < 2:
        raise ValueError("an MLP needs at least an input and an output width")
    if min(widths) <= 0:
        raise ValueError(f"zero or negative width in {widths}")
    return widths


def unpack(theta: np.ndarray, widths: Sequence[int]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views ``(W, b)`` per layer into a flat parameter vector."""
    layers = []
    off = 0
    for fin, fout in zip(widths[:-1], widths[1:]):
        W = theta[off : off + fin * fout].reshape(fin, fout)
        off += fin * fout
        b = theta[off : off + fout]
        off += fout
        layers.append((W, b))
    if off != theta.shape[0]:
        raise ValueError(f"parameter vector has {theta.shape[0]} entries, widths need {off}")
    return layers


def glorot_init(widths: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Glorot-uniform weights on +-sqrt(6/(fan_in+fan_out)), zero biases."""
    widths = _check_widths(widths)
    chunks = []
    for fin, fout in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fin + fout))
        chunks.append(rng.uniform(-limit, limit, size=fin * fout))
        chunks.append(np.zeros(fout))
    return np.concatenate(chunks)


@dataclass
class Mlp:
    """Dense network, silu on hidden layers and a linear output layer."""

    widths: tuple[int, ...]
    params: np.ndarray

    def __post_init__(self) -> None:
        self.widths = _check_widths(self.widths)
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.params.shape != (param_count(self.widths),):
            raise ValueError(
                f"expected {param_count(self.widths)} parameters, got {self.params.shape}"
            )

    @property
    def n_params(self) -> int:
        return self.params.shape[0]

    def __call__(self, s: Any) -> Any:
        return mlp_forward(self, s)


def mlp_init(widths: Sequence[int], seed: int | np.random.Generator) -> Mlp:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    widths = _check_widths(widths)
    return Mlp(widths, glorot_init(widths, rng))


# fused forward passes -------------------------------------------------------


def _values_forward(theta: np.ndarray, widths: Sequence[int], h: np.ndarray, keep: bool):
    layers = unpack(theta, widths)
    cache = []
    last = len(layers) - 1
    for k, (W, b) in enumerate(layers):
        z = h @ W + b
        if k == last:
            cache.append((h, None))
            h = z
        else:
            f0, f1 = silu_values(z, keep)
            cache.append((h, f1))
            h = f0
    return h, (cache if keep else None)


def _values_backward(theta, widths, cache, g):
    layers = unpack(theta, widths)
    grads = []
    gh = g
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        h, f1 = cache[k]
        gz = gh if f1 is None else gh * f1
        grads.append((h.T @ gz, gz.sum(axis=0)))
        if k:
            gh = gz @ W.T
    flat = []
    for gW, gb in reversed(grads):
        flat.append(gW.ravel())
        flat.append(gb)
    return np.concatenate(flat)


def _jet_forward(theta, widths, h, h1, h2, keep: bool):
    """Jet pass; ``h2 is None`` propagates first derivatives only."""
    layers = unpack(theta, widths)
    cache = []
    last = len(layers) - 1
    for k, (W, b) in enumerate(layers):
        z = h @ W + b
        z1 = h1 @ W
        z2 = None if h2 is None else h2 @ W
        if k == last:
            cache.append((h, h1, h2, None))
            h, h1, h2 = z, z1, z2
            continue
        hn, h1n, h2n, fs = silu_jet(z, z1, z2)
        if keep:
            cache.append((h, h1, h2, (z1, z2, fs)))
        h, h1, h2 = hn, h1n, h2n
    return (h, h1, h2), (cache if keep else None)


def _jet_backward(theta, widths, cache, g):
    layers = unpack(theta, widths)
    second = cache[0][2] is not None
    gh, gh1 = g[0], g[1]
    gh2 = g[2] if second else None
    grads = []
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        h, h1, h2, act = cache[k]
        if act is None:
            gz, gz1, gz2 = gh, gh1, gh2
        else:
            z1, z2, fs = act
            gz, gz1, gz2 = silu_jet_vjp(gh, gh1, gh2, z1, z2, fs)
        gW = h.T @ gz + h1.T @ gz1
        if second:
            gW += h2.T @ gz2
        grads.append((gW, gz.sum(axis=0)))
        if k:
            gh = gz @ W.T
            gh1 = gz1 @ W.T
            gh2 = gz2 @ W.T if second else None
    flat = []
    for gW, gb in reversed(grads):
        flat.append(gW.ravel())
        flat.append(gb)
    return np.concatenate(flat)


def _block(a: Any, fin: int, like: np.ndarray | None = None) -> tuple[np.ndarray, str]:
    a = np.asarray(a, dtype=np.float64)
    if like is not None and a.shape != like.shape:
        a = np.broadcast_to(a, like.shape)
    if fin == 1:
        if a.ndim == 0:
            return a.reshape(1, 1), "scalar"
        if a.ndim == 1:
            return a.reshape(-1, 1), "vector"
        return a, "matrix"
    if a.ndim == 1:
        return a.reshape(1, fin), "scalar"
    return a, "matrix"


def _inputs(widths, s):
    """Normalise an input (array or jet of arrays) to 2-D row blocks."""
    fin = widths[0]
    if isinstance(s, Jet2):
        if any(isinstance(c, Tensor) for c in (s.v, s.d1, s.d2)):
            raise TypeError("the fused MLP pass takes constant inputs; use mlp_forward_generic")
        v = np.asarray(s.v, dtype=np.float64)
        hv, kind = _block(v, fin)
        h2 = None if s.d2 is None else _block(s.d2, fin, v)[0]
        return kind, (hv, _block(s.d1, fin, v)[0], h2)
    hv, kind = _block(s, fin)
    return kind, (hv,)


def _shape_out(a: Any, kind: str, fout: int) -> Any:
    if kind == "scalar":
        return a[0, 0] if fout == 1 else a[0]
    return a[:, 0] if fout == 1 else a


def mlp_apply(theta: Any, widths: Sequence[int], s: Any, order: int = 2) -> Any:
    """Run the MLP with parameters ``theta`` on ``s``.

    ``s`` is either an array of points (value-only pass) or a :class:`Jet2`
    of arrays.  With ``theta`` a :class:`Tensor` the result is differentiable
    with respect to the parameters.  Points are rows; for one-dimensional
    inputs a flat array of ``n`` points is accepted.  ``order=1`` skips the
    second-derivative channel and returns ``d2=None``.
    """
    widths = tuple(widths)
    fout = widths[-1]
    if order == 1 and isinstance(s, Jet2):
        s = Jet2(s.v, s.d1, None)
    kind, blocks = _inputs(widths, s)
    taped = isinstance(theta, Tensor)
    theta_val = theta.value if taped else np.asarray(theta, dtype=np.float64)

    if len(blocks) == 1:
        out, cache = _values_forward(theta_val, widths, blocks[0], keep=taped)
        if taped:
            out = Tensor(
                out, (theta,), lambda g: (_values_backward(theta_val, widths, cache, g),)
            )
        return _shape_out(out, kind, fout)

    outs, cache = _jet_forward(theta_val, widths, *blocks, keep=taped)
    outs = tuple(o for o in outs if o is not None)
    if not taped:
        parts = [_shape_out(o, kind, fout) for o in outs]
    else:
        node = Tensor(
            np.stack(outs),
            (theta,),
            lambda g: (_jet_backward(theta_val, widths, cache, g),),
        )
        parts = [_shape_out(node[i], kind, fout) for i in range(len(outs))]
    return Jet2(*parts) if len(parts) == 3 else Jet2(parts[0], parts[1], None)


def mlp_forward(net: Mlp, s: Any) -> Any:
    """Forward pass of ``net``; jets in, jets out."""
    out = mlp_apply(net.params, net.widths, s)
    if isinstance(out, Jet2) and not out.is_finite():
        raise NonFiniteError("non-finite value in MLP forward pass")
    return out


def mlp_forward_generic(theta: Any, widths: Sequence[int], s: Jet2) -> Jet2:
    """Same map as :func:`mlp_apply`, composed from elementary jet operations."""
    widths = tuple(widths)
    fin = widths[0]
    if isinstance(theta, Tensor):
        layers = []
        off = 0
        for a, b in zip(widths[:-1], widths[1:]):
            W = theta[off : off + a * b].reshape(a, b)
            off += a * b
            layers.append((W, theta[off : off + b]))
            off += b
    else:
        layers = unpack(np.asarray(theta, dtype=np.float64), widths)
    v = np.asarray(s.v, dtype=np.float64)
    h = Jet2(*(_block(c, fin, v)[0] for c in (s.v, s.d1, s.d2)))
    last = len(layers) - 1
    for k, (W, b) in enumerate(layers):
        z = Jet2(h.v @ W + b, h.d1 @ W, h.d2 @ W)
        h = z if k == last else silu(z)
    return h


# operator networks ----------------------------------------------------------


@dataclass
class DeepOnet:
    """Branch/trunk pair; output is the p-term dot product ``sum b_i t_i``."""

    branch: Mlp
    trunk: Mlp

    def __post_init__(self) -> None:
        if self.branch.widths[-1] != self.trunk.widths[-1]:
            raise ValueError("branch and trunk must end in the same width p")

    @classmethod
    def init(
        cls,
        n_sensors: int,
        hidden: Sequence[int],
        p: int,
        seed: int | np.random.Generator,
        trunk_in: int = 1,
    ) -> "DeepOnet":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        branch = mlp_init((n_sensors, *hidden, p), rng)
        trunk = mlp_init((trunk_in, *hidden, p), rng)
        return cls(branch, trunk)

    @property
    def p(self) -> int:
        return self.trunk.widths[-1]

    @property
    def n_sensors(self) -> int:
        return self.branch.widths[0]

    @property
    def params(self) -> np.ndarray:
        return np.concatenate((self.branch.params, self.trunk.params))

    @property
    def n_params(self) -> int:
        return self.branch.n_params + self.trunk.n_params

    def __call__(self, v: Any, zeta: Any) -> Any:
        return deeponet_forward(self, v, zeta)


def deeponet_apply(
    theta: Any, branch_widths, trunk_widths, v: Any, zeta: Any, order: int = 2
) -> Any:
    """Operator output for sensor rows ``v`` (N, M) and trunk inputs ``zeta``.

    Returns an (N, J) array, or a jet of them when ``zeta`` is a jet.  Branch
    outputs do not depend on ``zeta``, so derivatives flow through the trunk
    only.
    """
    nb = param_count(branch_widths)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[1] != branch_widths[0]:
        raise ValueError(f"expected {branch_widths[0]} sensor values, got {v.shape[1]}")
    theta_b = theta[:nb]
    theta_t = theta[nb:]
    B = mlp_apply(theta_b, branch_widths, v)
    if B.ndim == 1:
        B = B.reshape(-1, 1) if isinstance(B, Tensor) else B[:, None]
    T = mlp_apply(theta_t, trunk_widths, zeta, order=order)
    if isinstance(T, Jet2):
        return Jet2(*(None if c is None else B @ _rows(c).T for c in (T.v, T.d1, T.d2)))
    return B @ _rows(T).T


def _rows(a: Any) -> Any:
    # a width-1 trunk comes back flat: one column of J points
    if a.ndim == 1:
        return a.reshape(-1, 1) if isinstance(a, Tensor) else a[:, None]
    return a


def deeponet_forward(net: DeepOnet, v: Any, zeta: Any) -> Any:
    """Evaluate ``G(v)(zeta)``; scalar in, scalar out for a single sensor vector."""
    v_arr = np.asarray(v, dtype=np.float64)
    if v_arr.shape[-1] != net.n_sensors:
        raise ValueError(f"expected {net.n_sensors} sensor values, got {v_arr.shape[-1]}")
    single_v = v_arr.ndim == 1
    zv = zeta.v if isinstance(zeta, Jet2) else zeta
    single_z = np.ndim(zv) == 0
    if single_z:
        zeta = (
            Jet2(*(np.atleast_1d(np.asarray(c, dtype=np.float64)) for c in (zeta.v, zeta.d1, zeta.d2)))
            if isinstance(zeta, Jet2)
            else np.atleast_1d(np.asarray(zeta, dtype=np.float64))
        )
    out = deeponet_apply(net.params, net.branch.widths, net.trunk.widths, v_arr, zeta)

    def squeeze(a):
        if single_v:
            a = a[0]
        if single_z:
            a = a[..., 0]
        return float(a) if np.ndim(a) == 0 else a

    if isinstance(out, Jet2):
        return Jet2(*(squeeze(c) for c in (out.v, out.d1, out.d2)))
    return squeeze(out)


# parameter bookkeeping ------------------------------------------------------


@dataclass
class ParamLayout:
    """Named segments of one flat parameter vector."""

    sizes: dict[str, int]
    offsets: dict[str, int] = field(init=False)
    total: int = field(init=False)

    def __post_init__(self) -> None:
        self.offsets = {}
        off = 0
        for name, n in self.sizes.items():
            self.offsets[name] = off
            off += n
        self.total = off

    def split(self, theta: Any) -> dict[str, Any]:
        if len(theta) != self.total:
            raise ValueError(f"expected {self.total} parameters, got {len(theta)}")
        return {k: theta[o : o + self.sizes[k]] for k, o in self.offsets.items()}

    def join(self, parts: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(parts[k], dtype=np.float64) for k in self.sizes])


# Adam -----------------------------------------------------------------------


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(n: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    return AdamState(np.zeros(n), np.zeros(n), 0, lr, beta1, beta2, eps)


def adam_step(
    state: AdamState, params: np.ndarray, grads: np.ndarray
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new params and a new state."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if not (params.shape == grads.shape == state.m.shape):
        raise ValueError(
            f"length mismatch: params {params.shape}, grads {grads.shape}, state {state.m.shape}"
        )
    if not np.all(np.isfinite(grads)):
        raise NonFiniteError(f"non-finite gradient at Adam step {state.t + 1}", state.t + 1)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.eps)
