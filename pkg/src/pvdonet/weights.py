"""Binary weight bundles.

Layout (all integers little-endian)::

    b"PVDW1"
    u16 len, method key (utf-8)
    u32 net count
    per net: u16 len, name (utf-8); u32 layer count L; L+1 u32 widths
    parameters of every net in order, float64 little-endian
    (per layer: weights row-major, then biases)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nets import param_count

__all__ = [
    "MAGIC",
    "WeightBundle",
    "WeightsFormatError",
    "WeightsVersionError",
    "CorruptWeightsError",
    "save_weights",
    "load_weights",
    "encode",
    "decode",
]

MAGIC = b"PVDW1"
_F64 = np.dtype("<f8")


class WeightsFormatError(ValueError):
    pass


class WeightsVersionError(WeightsFormatError):
    pass


class CorruptWeightsError(WeightsFormatError):
    pass


@dataclass
class WeightBundle:
    method: str
    names: list[str]
    widths: list[tuple[int, ...]]
    params: list[np.ndarray]

    def __post_init__(self) -> None:
        if not (len(self.names) == len(self.widths) == len(self.params)):
            raise ValueError("names, widths and params must have equal length")
        for name, w, p in zip(self.names, self.widths, self.params):
            if param_count(w) != np.size(p):
                raise ValueError(f"net {name!r}: widths {w} need {param_count(w)} params, got {np.size(p)}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightBundle):
            return NotImplemented
        return (
            self.method == other.method
            and self.names == other.names
            and [tuple(w) for w in self.widths] == [tuple(w) for w in other.widths]
            and all(np.array_equal(a, b) for a, b in zip(self.params, other.params))
        )


def _str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def encode(bundle: WeightBundle) -> bytes:
    head = [MAGIC, _str(bundle.method), struct.pack("<I", len(bundle.names))]
    for name, w in zip(bundle.names, bundle.widths):
        head.append(_str(name))
        head.append(struct.pack(f"<I{len(w)}I", len(w) - 1, *w))
    body = [np.asarray(p, dtype=_F64).tobytes() for p in bundle.params]
    return b"".join(head + body)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptWeightsError("weight file truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def text(self) -> str:
        (n,) = self.unpack("<H")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptWeightsError("bad string in header") from exc


def decode(data: bytes) -> WeightBundle:
    if data[: len(MAGIC)] != MAGIC:
        raise WeightsVersionError(f"not a {MAGIC.decode()} weight file (magic {data[:5]!r})")
    r = _Reader(data)
    r.take(len(MAGIC))
    method = r.text()
    (count,) = r.unpack("<I")
    if count > 10_000:
        raise CorruptWeightsError(f"implausible net count {count}")
    names, widths = [], []
    for _ in range(count):
        names.append(r.text())
        (layers,) = r.unpack("<I")
        if not 1 <= layers <= 1000:
            raise CorruptWeightsError(f"implausible layer count {layers}")
        widths.append(tuple(r.unpack(f"<{layers + 1}I")))
    sizes = [param_count(w) for w in widths]
    remaining = len(data) - r.pos
    if remaining != 8 * sum(sizes):
        raise CorruptWeightsError(
            f"parameter block has {remaining} bytes, shapes need {8 * sum(sizes)}"
        )
    params = []
    for n in sizes:
        params.append(np.frombuffer(r.take(8 * n), dtype=_F64).astype(np.float64))
    return WeightBundle(method, names, widths, params)


def save_weights(bundle: WeightBundle, path: str | Path) -> None:
    Path(path).write_bytes(encode(bundle))


def load_weights(path: str | Path) -> WeightBundle:
    return decode(Path(path).read_bytes())
