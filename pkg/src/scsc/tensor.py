"""Rank-4 tensor primitives in NCHW layout.

A tensor is a C-contiguous float64 ``np.ndarray`` of shape
``(n, c, h, w)`` = (batch, channels, rows, cols); element ``(n, c, h, w)``
lives at flat offset ``((n*C + c)*H + h)*W + w``.  ``as_tensor4`` is the
canonical constructor/validator.

Every function here is pure: inputs are never mutated and results are
freshly allocated.  Convolutions use "same" padding of ``(v-1)//2`` per
side, so the output spatial size is ``ceil(h/stride) x ceil(w/stride)``
regardless of the kernel size.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """Raised when an operand's dimensions violate an operation's contract."""


class PadMode(enum.Enum):
    ZERO = "zero"
    CIRCULAR = "circular"


@dataclass(frozen=True)
class ConvSpec:
    """Spatial geometry of a convolution: odd kernel, stride, padding mode."""

    kernel: int
    stride: int = 1
    pad: PadMode = PadMode.ZERO

    def __post_init__(self):
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ShapeError(f"kernel must be odd and >= 1, got {self.kernel}")
        if self.stride < 1:
            raise ShapeError(f"stride must be >= 1, got {self.stride}")


def as_tensor4(data, shape=None) -> np.ndarray:
    """Coerce ``data`` to a C-contiguous float64 rank-4 array."""
    x = np.ascontiguousarray(data, dtype=np.float64)
    if shape is not None:
        x = x.reshape(shape)
    if x.ndim != 4:
        raise ShapeError(f"expected a rank-4 (n,c,h,w) array, got rank {x.ndim}")
    if min(x.shape) < 1:
        raise ShapeError(f"all dimensions must be >= 1, got {x.shape}")
    return x


def require_tensor4(x: np.ndarray, what: str = "input") -> None:
    if not isinstance(x, np.ndarray) or x.ndim != 4:
        raise ShapeError(f"{what} must be a rank-4 (n,c,h,w) array")


def out_size(extent: int, stride: int) -> int:
    """Output spatial extent under same padding: ceil(extent/stride)."""
    return -(-extent // stride)


def pad_spatial(x: np.ndarray, amount: int, mode: PadMode) -> np.ndarray:
    """Pad the two spatial axes by ``amount`` on each side."""
    if amount == 0:
        return x
    widths = ((0, 0), (0, 0), (amount, amount), (amount, amount))
    if mode is PadMode.ZERO:
        return np.pad(x, widths, mode="constant")
    return np.pad(x, widths, mode="wrap")


def conv_windows(x: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Padded sliding windows of shape (n, c, H', W', v, v) for a convolution.

    The returned array is a read-only strided view; callers must not write
    to it.
    """
    v, s = spec.kernel, spec.stride
    xp = pad_spatial(x, (v - 1) // 2, spec.pad)
    win = sliding_window_view(xp, (v, v), axis=(2, 3))
    return win[:, :, ::s, ::s]


def conv2d_dense(x: np.ndarray, w: np.ndarray, b: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Dense 2-d convolution: w has shape (c_out, c_in, v, v), b (c_out,)."""
    require_tensor4(x)
    if w.ndim != 4 or w.shape[2] != spec.kernel or w.shape[3] != spec.kernel:
        raise ShapeError(f"dense weights must be (c_out, c_in, {spec.kernel}, {spec.kernel}), got {w.shape}")
    if w.shape[1] != x.shape[1]:
        raise ShapeError(f"weight c_in {w.shape[1]} != input channels {x.shape[1]}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"bias must be ({w.shape[0]},), got {b.shape}")
    win = conv_windows(x, spec)
    y = np.einsum("nchwuv,ocuv->nohw", win, w)
    return y + b[None, :, None, None]


def conv2d_pointwise(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """1x1 convolution: a per-pixel channel map. w (c_out, c_in), b (c_out,)."""
    require_tensor4(x)
    if w.ndim != 2 or w.shape[1] != x.shape[1]:
        raise ShapeError(f"pointwise weights must be (c_out, {x.shape[1]}), got {w.shape}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"bias must be ({w.shape[0]},), got {b.shape}")
    y = np.einsum("oc,nchw->nohw", w, x)
    return y + b[None, :, None, None]


def conv2d_depthwise(x: np.ndarray, w: np.ndarray, b: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Depthwise convolution: one v x v filter per channel, no cross-channel mixing.

    w has shape (c, 1, v, v), b (c,).  Output channel c depends only on
    input channel c.
    """
    require_tensor4(x)
    if w.ndim != 4 or w.shape[1] != 1 or w.shape[2] != spec.kernel or w.shape[3] != spec.kernel:
        raise ShapeError(f"depthwise weights must be (c, 1, {spec.kernel}, {spec.kernel}), got {w.shape}")
    if w.shape[0] != x.shape[1]:
        raise ShapeError(f"weight channels {w.shape[0]} != input channels {x.shape[1]}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"bias must be ({w.shape[0]},), got {b.shape}")
    win = conv_windows(x, spec)
    y = np.einsum("nchwuv,cuv->nchw", win, w[:, 0])
    return y + b[None, :, None, None]


def subsample(x: np.ndarray, stride: int) -> np.ndarray:
    """Keep every stride-th pixel starting at (0, 0); output ceil(h/s) x ceil(w/s)."""
    require_tensor4(x)
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    return np.ascontiguousarray(x[:, :, ::stride, ::stride])


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise 1/(1+exp(-x)), overflow-safe on both tails."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def batched_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-slot matrix product: (B,P,Q) @ (B,Q,R) -> (B,P,R)."""
    if a.ndim != 3 or b.ndim != 3:
        raise ShapeError(f"operands must be rank-3, got {a.ndim} and {b.ndim}")
    if a.shape[0] != b.shape[0] or a.shape[2] != b.shape[1]:
        raise ShapeError(f"incompatible batched shapes {a.shape} @ {b.shape}")
    return np.einsum("bpq,bqr->bpr", a, b)


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """Spatial mean per (n, c); output shape (n, c, 1, 1)."""
    require_tensor4(x)
    return x.mean(axis=(2, 3), keepdims=True)


def linear(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map on row vectors: x (n, d), w (k, d), b (k,) -> (n, k)."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"linear expects x (n,d) and w (k,d); got {x.shape}, {w.shape}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"bias must be ({w.shape[0]},), got {b.shape}")
    return x @ w.T + b


def batchnorm_train(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Normalize each channel over (n, h, w) with batch statistics, then affine."""
    require_tensor4(x)
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    mean = x.mean(axis=(0, 2, 3), keepdims=True)
    var = x.var(axis=(0, 2, 3), keepdims=True)
    xhat = (x - mean) / np.sqrt(var + eps)
    return gamma[None, :, None, None] * xhat + beta[None, :, None, None]


def batchnorm_infer(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    eps: float = 1e-5,
) -> np.ndarray:
    """Normalize each channel with frozen running statistics, then affine."""
    require_tensor4(x)
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    xhat = (x - running_mean[None, :, None, None]) / np.sqrt(running_var[None, :, None, None] + eps)
    return gamma[None, :, None, None] * xhat + beta[None, :, None, None]


def layernorm_channels(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Normalize the channel vector at each (n, h, w) position, then affine."""
    require_tensor4(x)
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    mean = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    xhat = (x - mean) / np.sqrt(var + eps)
    return gamma[None, :, None, None] * xhat + beta[None, :, None, None]


def space_to_depth(x: np.ndarray, r: int) -> np.ndarray:
    """Fold each r x r spatial phase into channels: (n,c,h,w) -> (n, c*r*r, h/r, w/r).

    Output channels come in r*r blocks of size c, one per spatial phase,
    phases ordered row-major: block p = r*dy + dx holds x[:, :, dy::r, dx::r].
    """
    require_tensor4(x)
    n, c, h, w = x.shape
    if r < 1:
        raise ShapeError(f"block size must be >= 1, got {r}")
    if h % r or w % r:
        raise ShapeError(f"spatial size {h}x{w} not divisible by block size {r}")
    out = np.empty((n, c * r * r, h // r, w // r), dtype=np.float64)
    for dy in range(r):
        for dx in range(r):
            p = r * dy + dx
            out[:, p * c : (p + 1) * c] = x[:, :, dy::r, dx::r]
    return out


def depth_to_space(x: np.ndarray, r: int) -> np.ndarray:
    """Inverse of ``space_to_depth``: (n, c*r*r, h, w) -> (n, c, h*r, w*r)."""
    require_tensor4(x)
    n, crr, h, w = x.shape
    if r < 1 or crr % (r * r):
        raise ShapeError(f"channel count {crr} not divisible by r*r = {r * r}")
    c = crr // (r * r)
    out = np.empty((n, c, h * r, w * r), dtype=np.float64)
    for dy in range(r):
        for dx in range(r):
            p = r * dy + dx
            out[:, :, dy::r, dx::r] = x[:, p * c : (p + 1) * c]
    return out
