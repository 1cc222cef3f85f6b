"""Fused elementwise loops for the SiLU jet passes.

``tanh`` stays in numpy (vectorised libm); the arithmetic around it runs in
one pass per layer instead of a dozen temporaries.  All kernels take flat
contiguous arrays.
"""

from __future__ import annotations

import numba
import numpy as np

_jit = numba.njit(cache=True, fastmath=True, nogil=True)


@_jit
def _fwd2(z, t, z1, z2, h, h1, h2, f1, f2, f3):
    for i in range(z.size):
        x = z[i]
        s = 0.5 + 0.5 * t[i]
        o = 1.0 - s
        q = s * o
        r = 1.0 - 2.0 * s
        a1 = s * (1.0 + x * o)
        a2 = q * (2.0 + x * r)
        d1 = z1[i]
        h[i] = x * s
        h1[i] = a1 * d1
        h2[i] = a2 * d1 * d1 + a1 * z2[i]
        f1[i] = a1
        f2[i] = a2
        f3[i] = q * (r * (3.0 + x * r) - 2.0 * x * q)


@_jit
def _fwd1(z, t, z1, h, h1, f1, f2):
    for i in range(z.size):
        x = z[i]
        s = 0.5 + 0.5 * t[i]
        o = 1.0 - s
        a1 = s * (1.0 + x * o)
        h[i] = x * s
        h1[i] = a1 * z1[i]
        f1[i] = a1
        f2[i] = s * o * (2.0 + x * (1.0 - 2.0 * s))


@_jit
def _fwd0(z, t, h, f1):
    for i in range(z.size):
        x = z[i]
        s = 0.5 + 0.5 * t[i]
        h[i] = x * s
        f1[i] = s * (1.0 + x * (1.0 - s))


@_jit
def _bwd2(gh, gh1, gh2, z1, z2, f1, f2, f3, gz, gz1, gz2):
    for i in range(gh.size):
        d1 = z1[i]
        a1 = f1[i]
        t = gh2[i] * f2[i]
        gz[i] = gh[i] * a1 + gh1[i] * f2[i] * d1 + gh2[i] * f3[i] * d1 * d1 + t * z2[i]
        gz1[i] = gh1[i] * a1 + 2.0 * t * d1
        gz2[i] = gh2[i] * a1


@_jit
def _bwd1(gh, gh1, z1, f1, f2, gz, gz1):
    for i in range(gh.size):
        a1 = f1[i]
        gz[i] = gh[i] * a1 + gh1[i] * f2[i] * z1[i]
        gz1[i] = gh1[i] * a1


def _flat(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a).reshape(-1)


def silu_values(z: np.ndarray, keep: bool):
    """``silu(z)`` and, when ``keep``, its derivative for the backward pass."""
    t = np.tanh(0.5 * z)
    h = np.empty_like(z)
    f1 = np.empty_like(z)
    _fwd0(_flat(z), _flat(t), h.reshape(-1), f1.reshape(-1))
    return h, (f1 if keep else None)


def silu_jet(z: np.ndarray, z1: np.ndarray, z2: np.ndarray | None):
    """Push a jet through SiLU.

    Returns ``(h, h1, h2, fs)`` where ``fs`` holds the derivative factors the
    backward pass needs; ``h2`` is ``None`` when ``z2`` is.
    """
    t = _flat(np.tanh(0.5 * z))
    h, h1, f1, f2 = (np.empty_like(z) for _ in range(4))
    if z2 is None:
        _fwd1(_flat(z), t, _flat(z1), h.reshape(-1), h1.reshape(-1), f1.reshape(-1), f2.reshape(-1))
        return h, h1, None, (f1, f2)
    h2, f3 = np.empty_like(z), np.empty_like(z)
    _fwd2(
        _flat(z), t, _flat(z1), _flat(z2),
        h.reshape(-1), h1.reshape(-1), h2.reshape(-1),
        f1.reshape(-1), f2.reshape(-1), f3.reshape(-1),
    )
    return h, h1, h2, (f1, f2, f3)


def silu_jet_vjp(gh, gh1, gh2, z1, z2, fs):
    """Cotangents of the pre-activation jet from those of the output jet."""
    gz, gz1 = np.empty_like(gh), np.empty_like(gh)
    if gh2 is None:
        f1, f2 = fs
        _bwd1(_flat(gh), _flat(gh1), _flat(z1), _flat(f1), _flat(f2), gz.reshape(-1), gz1.reshape(-1))
        return gz, gz1, None
    f1, f2, f3 = fs
    gz2 = np.empty_like(gh)
    _bwd2(
        _flat(gh), _flat(gh1), _flat(gh2), _flat(z1), _flat(z2),
        _flat(f1), _flat(f2), _flat(f3),
        gz.reshape(-1), gz1.reshape(-1), gz2.reshape(-1),
    )
    return gz, gz1, gz2
