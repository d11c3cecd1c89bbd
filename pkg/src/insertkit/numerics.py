"""Dense tensor type, elementwise arithmetic, cosine similarity, and a
central-difference gradient checker.

All loss/gradient math downstream runs in float64; float32 is accepted on
input and widened immediately.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DegenerateEmbeddingError, FormatError, NumericalError, ShapeError

_DTYPE_TAGS = {"f32": 0, "f64": 1}
_TAG_DTYPES = {0: "f32", 1: "f64"}
_NP_DTYPES = {"f32": np.float32, "f64": np.float64}

ArrayLike = Union[np.ndarray, Sequence]


class Tensor:
    """Immutable dense row-major array with an explicit shape and dtype tag."""

    __slots__ = ("shape", "dtype", "data")

    def __init__(self, data: ArrayLike, dtype: str = "f64"):
        if dtype not in _NP_DTYPES:
            raise ValueError(f"unknown dtype {dtype!r}")
        arr = np.asarray(data, dtype=_NP_DTYPES[dtype])
        if arr.ndim == 0:
            raise ShapeError("scalar tensors are not supported")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "shape", tuple(int(d) for d in arr.shape))
        object.__setattr__(self, "dtype", dtype)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def size(self) -> int:
        return int(self.data.size)

    def to_f64(self) -> np.ndarray:
        """Widened float64 view for internal computation."""
        return np.asarray(self.data, dtype=np.float64)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tensor)
            and self.shape == other.shape
            and self.dtype == other.dtype
            and bool(np.array_equal(self.data, other.data))
        )

    def __hash__(self):
        return hash((self.shape, self.dtype, self.data.tobytes()))


def ones_like(t: Tensor) -> Tensor:
    return Tensor(np.ones(t.shape), dtype=t.dtype)


def _broadcastable(a_shape: tuple, b_shape: tuple) -> bool:
    # Only the leading-singleton channel broadcast is supported: a (C, ...)
    # against b (1, ...) with identical trailing dims. General numpy-style
    # broadcasting is deliberately rejected so shape bugs stay loud.
    if a_shape == b_shape:
        return True
    return (
        len(a_shape) == len(b_shape)
        and b_shape[0] == 1
        and a_shape[1:] == b_shape[1:]
    )


_OPS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


def elementwise(op_tag: str, a: Tensor, b: Tensor) -> Tensor:
    """Elementwise op with the restricted leading-singleton broadcast rule."""
    if op_tag not in _OPS:
        raise ValueError(f"unknown op tag {op_tag!r}")
    if not _broadcastable(a.shape, b.shape):
        raise ShapeError(f"shapes {a.shape} and {b.shape} are not compatible")
    out = _OPS[op_tag](a.to_f64(), b.to_f64())
    return Tensor(out, dtype="f64")


def mul(a: Tensor, b: Tensor) -> Tensor:
    return elementwise("mul", a, b)


def cosine(u: ArrayLike, v: ArrayLike) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding drift."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.size != v.size or u.size == 0:
        raise ShapeError(f"vector lengths differ: {u.size} vs {v.size}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateEmbeddingError("zero-norm embedding")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class GradCheckReport:
    max_abs_err: float
    max_rel_err: float
    worst_index: int
    passed: bool


def grad_check(
    f: Callable[[Tensor], float],
    x: Tensor,
    analytic_grad: Tensor,
    step: float = 1e-4,
    tol: float = 1e-5,
    coords: Sequence[int] | None = None,
) -> GradCheckReport:
    """Compare an analytic gradient against central differences.

    `coords` restricts the check to a subset of flat indices (used for
    large parameter vectors); by default every coordinate is probed.
    Relative error uses denominator max(|analytic|, |numeric|, 1) so
    exactly-zero gradients are judged on absolute error.
    """
    if x.dtype != "f64":
        raise ValueError("grad_check requires an f64 input tensor")
    if analytic_grad.shape != x.shape:
        raise ShapeError(f"gradient shape {analytic_grad.shape} != input shape {x.shape}")
    base = x.to_f64().ravel().copy()
    grad = analytic_grad.to_f64().ravel()
    indices = range(base.size) if coords is None else coords

    max_abs = 0.0
    max_rel = 0.0
    worst = 0
    for i in indices:
        probe = base.copy()
        probe[i] = base[i] + step
        f_plus = float(f(Tensor(probe.reshape(x.shape))))
        probe[i] = base[i] - step
        f_minus = float(f(Tensor(probe.reshape(x.shape))))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericalError(f"non-finite loss while probing coordinate {i}")
        numeric = (f_plus - f_minus) / (2.0 * step)
        abs_err = abs(grad[i] - numeric)
        rel_err = abs_err / max(abs(grad[i]), abs(numeric), 1.0)
        if rel_err > max_rel:
            max_rel = rel_err
            worst = i
        max_abs = max(max_abs, abs_err)
    return GradCheckReport(
        max_abs_err=float(max_abs),
        max_rel_err=float(max_rel),
        worst_index=int(worst),
        passed=bool(max_rel <= tol),
    )


def write_itsr(path: Union[str, Path], t: Tensor) -> None:
    """Write a tensor in the ITSR binary format."""
    buf = bytearray()
    buf += b"ITSR"
    buf += struct.pack("<I", 1)
    buf += struct.pack("<B", _DTYPE_TAGS[t.dtype])
    buf += struct.pack("<B", len(t.shape))
    for d in t.shape:
        buf += struct.pack("<Q", d)
    buf += t.data.astype("<f4" if t.dtype == "f32" else "<f8").tobytes()
    Path(path).write_bytes(bytes(buf))


def read_itsr(path: Union[str, Path]) -> Tensor:
    """Read an ITSR tensor file, rejecting trailing bytes and non-finite data."""
    raw = Path(path).read_bytes()
    if len(raw) < 10 or raw[:4] != b"ITSR":
        raise FormatError(f"{path}: not an ITSR file")
    version = struct.unpack_from("<I", raw, 4)[0]
    if version != 1:
        raise FormatError(f"{path}: unsupported ITSR version {version}")
    dtype_tag = raw[8]
    if dtype_tag not in _TAG_DTYPES:
        raise FormatError(f"{path}: unknown dtype tag {dtype_tag}")
    ndim = raw[9]
    offset = 10
    if len(raw) < offset + 8 * ndim:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{ndim}Q", raw, offset)
    offset += 8 * ndim
    if any(d == 0 for d in dims):
        raise FormatError(f"{path}: zero-sized dimension")
    dtype = _TAG_DTYPES[dtype_tag]
    itemsize = 4 if dtype == "f32" else 8
    count = int(np.prod(dims))
    expected = offset + itemsize * count
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4" if dtype == "f32" else "<f8", count=count, offset=offset)
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{path}: non-finite values in tensor data")
    return Tensor(data.reshape(dims), dtype=dtype)
