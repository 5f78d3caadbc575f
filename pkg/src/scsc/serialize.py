"""Binary tensor files and parameter checkpoints.

Tensor file layout (little-endian): the magic string ``SCSCT4``, four u32
values (n, c, h, w), then n*c*h*w float64 values in row-major (n, c, h, w)
order.

A checkpoint wraps many named tensors in one file: the magic ``SCSCKPT1``,
a u32 byte length, a JSON manifest of (name, shape) pairs in a fixed
order, then one tensor record per entry in the same order.  Tensors of
rank < 4 are stored with leading size-1 axes; the manifest keeps the true
shape, so round-trips are exact and deterministic byte-for-byte.
"""

from __future__ import annotations

import io
import json
import struct
from typing import BinaryIO, Mapping

import numpy as np

from .tensor import ShapeError

TENSOR_MAGIC = b"SCSCT4"
CHECKPOINT_MAGIC = b"SCSCKPT1"


def write_tensor(f: BinaryIO, x: np.ndarray) -> None:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ShapeError(f"tensor files hold rank-4 arrays, got rank {x.ndim}")
    f.write(TENSOR_MAGIC)
    f.write(struct.pack("<4I", *x.shape))
    f.write(x.astype("<f8").tobytes())


def read_tensor(f: BinaryIO) -> np.ndarray:
    magic = f.read(len(TENSOR_MAGIC))
    if magic != TENSOR_MAGIC:
        raise ValueError(f"bad tensor magic {magic!r}")
    shape = struct.unpack("<4I", f.read(16))
    count = int(np.prod(shape))
    raw = f.read(count * 8)
    if len(raw) != count * 8:
        raise ValueError("truncated tensor payload")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def dump_tensor(path, x: np.ndarray) -> None:
    with open(path, "wb") as f:
        write_tensor(f, x)


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        return read_tensor(f)


def _as_rank4(x: np.ndarray) -> np.ndarray:
    if x.ndim > 4:
        raise ShapeError(f"cannot store rank-{x.ndim} tensor")
    return x.reshape((1,) * (4 - x.ndim) + x.shape)


def checkpoint_bytes(entries: Mapping[str, np.ndarray]) -> bytes:
    manifest = json.dumps([[name, list(arr.shape)] for name, arr in entries.items()]).encode()
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", len(manifest)))
    buf.write(manifest)
    for arr in entries.values():
        write_tensor(buf, _as_rank4(np.asarray(arr, dtype=np.float64)))
    return buf.getvalue()


def save_checkpoint(path, entries: Mapping[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(checkpoint_bytes(entries))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"bad checkpoint magic {magic!r}")
        (mlen,) = struct.unpack("<I", f.read(4))
        manifest = json.loads(f.read(mlen).decode())
        out: dict[str, np.ndarray] = {}
        for name, shape in manifest:
            out[name] = read_tensor(f).reshape(shape)
        return out
