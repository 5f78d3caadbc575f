"""Reverse-mode differentiation over recorded tensor programs.

A ``Tape`` is an append-only list of nodes.  Each primitive records its
forward value plus a backward closure that maps the output gradient to
per-parent gradients; ``backward`` walks the nodes in reverse id order
(ids are topologically ordered by construction) and accumulates gradients
by summation over all paths.

Backward rules are hand-written per primitive.  Conventions: relu takes
subgradient 0 at 0; batchnorm differentiates through the batch statistics.
A tape is single-writer while recording; once built it is read-only and
``backward`` may be called any number of times without side effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tensor as t
from .tensor import ConvSpec, PadMode, ShapeError


@dataclass
class TapeNode:
    op: str
    parents: tuple[int, ...]
    value: np.ndarray
    # maps d(root)/d(output) -> tuple of d(root)/d(parent), one per parent;
    # None marks a leaf
    backward: Callable[[np.ndarray], tuple[np.ndarray, ...]] | None = None
    name: str | None = None


@dataclass(frozen=True)
class Var:
    """Handle to one tape node; cheap to copy, compares by identity of position."""

    tape: "Tape"
    nid: int

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.nid].value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.tape.nodes[self.nid].value.shape


class Tape:
    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, value, name: str | None = None) -> Var:
        """Record an input/parameter node; gradients are reported for leaves."""
        arr = np.asarray(value, dtype=np.float64)
        self.nodes.append(TapeNode("leaf", (), arr, None, name))
        return Var(self, len(self.nodes) - 1)

    def record(self, op: str, parents: Sequence[Var], value: np.ndarray, backward) -> Var:
        for p in parents:
            if p.tape is not self:
                raise ValueError("all inputs must live on the same tape")
        self.nodes.append(TapeNode(op, tuple(p.nid for p in parents), value, backward))
        return Var(self, len(self.nodes) - 1)

    def leaves(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.backward is None]

    def backward(self, root: Var) -> dict[int, np.ndarray]:
        """Gradients of a scalar ``root`` w.r.t. every node reached, keyed by node id.

        Every leaf is present in the result; leaves the root does not
        depend on get zero gradients.
        """
        if root.tape is not self:
            raise ValueError("root does not belong to this tape")
        if root.value.size != 1:
            raise ShapeError(f"backward requires a scalar root, got shape {root.value.shape}")
        grads: dict[int, np.ndarray] = {root.nid: np.ones_like(root.value)}
        for nid in range(root.nid, -1, -1):
            node = self.nodes[nid]
            g = grads.get(nid)
            if g is None or node.backward is None:
                continue
            parent_grads = node.backward(g)
            for pid, pg in zip(node.parents, parent_grads):
                if pg is None:
                    continue
                if pid in grads:
                    grads[pid] = grads[pid] + pg
                else:
                    grads[pid] = pg
        for lid in self.leaves():
            if lid not in grads:
                grads[lid] = np.zeros_like(self.nodes[lid].value)
        return grads


# ---------------------------------------------------------------------------
# primitives


def _conv_input_grad(g: np.ndarray, w_tap, x_shape, spec: ConvSpec) -> np.ndarray:
    """Scatter the output gradient back through a sliding-window convolution.

    ``w_tap(u, v)`` must return the per-tap channel map applied to the
    gradient: an (n, c_in, H', W') array for kernel tap (u, v).
    """
    v, s = spec.kernel, spec.stride
    p = (v - 1) // 2
    n, c, h, w = x_shape
    hp, wp = h + 2 * p, w + 2 * p
    ho, wo = g.shape[2], g.shape[3]
    dxp = np.zeros((n, c, hp, wp), dtype=np.float64)
    for u in range(v):
        for vv in range(v):
            dxp[:, :, u : u + s * ho : s, vv : vv + s * wo : s] += w_tap(u, vv)
    if p == 0:
        return dxp
    if spec.pad is PadMode.ZERO:
        return dxp[:, :, p : p + h, p : p + w]
    # circular padding: fold every padded row/col back onto its source index
    dx_rows = np.zeros((n, c, h, wp), dtype=np.float64)
    for i in range(hp):
        dx_rows[:, :, (i - p) % h, :] += dxp[:, :, i, :]
    dx = np.zeros((n, c, h, w), dtype=np.float64)
    for j in range(wp):
        dx[:, :, :, (j - p) % w] += dx_rows[:, :, :, j]
    return dx


def conv_dense(x: Var, w: Var, b: Var, spec: ConvSpec) -> Var:
    xv, wv = x.value, w.value
    y = t.conv2d_dense(xv, wv, b.value, spec)
    win = t.conv_windows(xv, spec)

    def bwd(g):
        dw = np.einsum("nohw,nchwuv->ocuv", g, win)
        db = g.sum(axis=(0, 2, 3))
        dx = _conv_input_grad(
            g, lambda u, vv: np.einsum("oc,nohw->nchw", wv[:, :, u, vv], g), xv.shape, spec
        )
        return dx, dw, db

    return x.tape.record("conv_dense", (x, w, b), y, bwd)


def conv_pointwise(x: Var, w: Var, b: Var) -> Var:
    xv, wv = x.value, w.value
    y = t.conv2d_pointwise(xv, wv, b.value)

    def bwd(g):
        dx = np.einsum("oc,nohw->nchw", wv, g)
        dw = np.einsum("nohw,nchw->oc", g, xv)
        db = g.sum(axis=(0, 2, 3))
        return dx, dw, db

    return x.tape.record("conv_pointwise", (x, w, b), y, bwd)


def conv_depthwise(x: Var, w: Var, b: Var, spec: ConvSpec) -> Var:
    xv, wv = x.value, w.value
    y = t.conv2d_depthwise(xv, wv, b.value, spec)
    win = t.conv_windows(xv, spec)
    w3 = wv[:, 0]

    def bwd(g):
        dw = np.einsum("nchw,nchwuv->cuv", g, win)[:, None]
        db = g.sum(axis=(0, 2, 3))
        dx = _conv_input_grad(
            g, lambda u, vv: g * w3[None, :, u, vv, None, None], xv.shape, spec
        )
        return dx, dw, db

    return x.tape.record("conv_depthwise", (x, w, b), y, bwd)


def sub_sample(x: Var, stride: int) -> Var:
    xv = x.value
    y = t.subsample(xv, stride)

    def bwd(g):
        dx = np.zeros_like(xv)
        dx[:, :, ::stride, ::stride] = g
        return (dx,)

    return x.tape.record("subsample", (x,), y, bwd)


def sigmoid(x: Var) -> Var:
    y = t.sigmoid(x.value)
    return x.tape.record("sigmoid", (x,), y, lambda g: (g * y * (1.0 - y),))


def relu(x: Var) -> Var:
    xv = x.value
    y = t.relu(xv)
    return x.tape.record("relu", (x,), y, lambda g: (g * (xv > 0),))


def add(a: Var, b: Var) -> Var:
    if a.value.shape != b.value.shape:
        raise ShapeError(f"add requires equal shapes, got {a.value.shape} and {b.value.shape}")
    y = a.value + b.value
    return a.tape.record("add", (a, b), y, lambda g: (g, g))


def mul(a: Var, b: Var) -> Var:
    if a.value.shape != b.value.shape:
        raise ShapeError(f"mul requires equal shapes, got {a.value.shape} and {b.value.shape}")
    av, bv = a.value, b.value
    return a.tape.record("mul", (a, b), av * bv, lambda g: (g * bv, g * av))


def scale(x: Var, c: float) -> Var:
    return x.tape.record("scale", (x,), x.value * c, lambda g: (g * c,))


def sum_all(x: Var) -> Var:
    xv = x.value
    y = np.asarray(xv.sum())
    return x.tape.record("sum_all", (x,), y, lambda g: (np.broadcast_to(g, xv.shape).copy(),))


def reshape(x: Var, shape) -> Var:
    xv = x.value
    y = xv.reshape(shape)
    return x.tape.record("reshape", (x,), y, lambda g: (g.reshape(xv.shape),))


def matmul_batched(a: Var, b: Var) -> Var:
    av, bv = a.value, b.value
    y = t.batched_matmul(av, bv)

    def bwd(g):
        da = np.einsum("bpr,bqr->bpq", g, bv)
        db = np.einsum("bpq,bpr->bqr", av, g)
        return da, db

    return a.tape.record("batched_matmul", (a, b), y, bwd)


def global_avg_pool(x: Var) -> Var:
    xv = x.value
    y = t.global_avg_pool(xv)
    area = xv.shape[2] * xv.shape[3]

    def bwd(g):
        return (np.broadcast_to(g / area, xv.shape).copy(),)

    return x.tape.record("global_avg_pool", (x,), y, bwd)


def linear(x: Var, w: Var, b: Var) -> Var:
    xv, wv = x.value, w.value
    y = t.linear(xv, wv, b.value)

    def bwd(g):
        return g @ wv, g.T @ xv, g.sum(axis=0)

    return x.tape.record("linear", (x, w, b), y, bwd)


def batchnorm(x: Var, gamma: Var, beta: Var, eps: float = 1e-5) -> Var:
    """Batch normalization with batch statistics (the train-mode rule)."""
    xv, gv = x.value, gamma.value
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    axes = (0, 2, 3)
    mean = xv.mean(axis=axes, keepdims=True)
    var = xv.var(axis=axes, keepdims=True)
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (xv - mean) * invstd
    y = gv[None, :, None, None] * xhat + beta.value[None, :, None, None]
    count = xv.shape[0] * xv.shape[2] * xv.shape[3]

    def bwd(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * gv[None, :, None, None]
        dx = (
            invstd
            / count
            * (
                count * dxhat
                - dxhat.sum(axis=axes, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
            )
        )
        return dx, dgamma, dbeta

    return x.tape.record("batchnorm", (x, gamma, beta), y, bwd)


def layernorm_channels(x: Var, gamma: Var, beta: Var, eps: float = 1e-5) -> Var:
    xv, gv = x.value, gamma.value
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    mean = xv.mean(axis=1, keepdims=True)
    var = xv.var(axis=1, keepdims=True)
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (xv - mean) * invstd
    y = gv[None, :, None, None] * xhat + beta.value[None, :, None, None]
    c = xv.shape[1]

    def bwd(g):
        dgamma = (g * xhat).sum(axis=(0, 2, 3))
        dbeta = g.sum(axis=(0, 2, 3))
        dxhat = g * gv[None, :, None, None]
        dx = (
            invstd
            / c
            * (
                c * dxhat
                - dxhat.sum(axis=1, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=1, keepdims=True)
            )
        )
        return dx, dgamma, dbeta

    return x.tape.record("layernorm", (x, gamma, beta), y, bwd)


def space_to_depth(x: Var, r: int) -> Var:
    xv = x.value
    y = t.space_to_depth(xv, r)
    c = xv.shape[1]

    def bwd(g):
        dx = np.empty_like(xv)
        for dy in range(r):
            for dxo in range(r):
                p = r * dy + dxo
                dx[:, :, dy::r, dxo::r] = g[:, p * c : (p + 1) * c]
        return (dx,)

    return x.tape.record("space_to_depth", (x,), y, bwd)


def fuse_branches(branches: Sequence[Var], gates: Var, groups: int) -> Var:
    """Gate-weighted sum of m branch tensors over g contiguous channel groups.

    Branches have shape (n, c, H, W) each; gates (n, m*g, H, W) with gate
    channel i*g + j weighting branch i within channel group j.  See
    ``block.spatial_fuse`` for the layout contract.
    """
    from .block import fuse_weighted_sum  # local import: block builds on tape

    bvals = [b.value for b in branches]
    gv = gates.value
    y = fuse_weighted_sum(bvals, gv, groups)
    m = len(bvals)
    n, c, h, w = bvals[0].shape
    cg = c // groups

    def bwd(g):
        gates5 = gv.reshape(n, m, groups, h, w)
        gview = g.reshape(n, groups, cg, h, w)
        dbranches = []
        for i in range(m):
            dbranches.append((gview * gates5[:, i, :, None]).reshape(n, c, h, w))
        dgates = np.empty_like(gates5)
        for i in range(m):
            bview = bvals[i].reshape(n, groups, cg, h, w)
            dgates[:, i] = (gview * bview).sum(axis=2)
        return (*dbranches, dgates.reshape(gv.shape))

    return branches[0].tape.record("fuse", (*branches, gates), y, bwd)


def cross_entropy(logits: Var, labels: np.ndarray) -> Var:
    """Mean negative log-softmax of the true class; labels is an int array."""
    z = logits.value
    labels = np.asarray(labels)
    if z.ndim != 2:
        raise ShapeError(f"logits must be (n, k), got {z.shape}")
    n, k = z.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels must be ({n},), got {labels.shape}")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k}), got range [{labels.min()}, {labels.max()}]")
    zs = z - z.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(zs).sum(axis=1, keepdims=True))
    logp = zs - logsumexp
    loss = np.asarray(-logp[np.arange(n), labels].mean())
    softmax = np.exp(logp)

    def bwd(g):
        d = softmax.copy()
        d[np.arange(n), labels] -= 1.0
        return (float(g) * d / n,)

    return logits.tape.record("cross_entropy", (logits,), loss, bwd)


# ---------------------------------------------------------------------------
# finite-difference checking


@dataclass
class GradCheckReport:
    """Per-parameter max relative error of tape gradients vs central differences."""

    errors: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-4

    @property
    def max_error(self) -> float:
        return float(max(self.errors.values())) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return bool(self.max_error < self.tol)

    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.errors.items() if not v < self.tol}


def grad_check(f, params: dict[str, np.ndarray], h: float = 1e-5, tol: float = 1e-4) -> GradCheckReport:
    """Compare tape gradients of ``f`` against central finite differences.

    ``f(ops, params)`` must evaluate a scalar under any execution backend:
    it receives ``TapeOps`` with Var-valued params for the tape pass and
    ``NumpyOps`` with array-valued params for each finite-difference probe.
    Relative error per element is |g_ad - g_fd| / max(1, |g_ad|, |g_fd|);
    failures are reported, never raised.
    """
    from .ops import NumpyOps, TapeOps  # local import: ops builds on tape

    if h <= 0:
        raise ValueError(f"step must be > 0, got {h}")

    tape = Tape()
    tops = TapeOps(tape)
    vparams = {k: tape.leaf(v, name=k) for k, v in params.items()}
    root = f(tops, vparams)
    grads = tape.backward(root)

    nops = NumpyOps()

    def eval_plain(p):
        return float(np.asarray(f(nops, p)))

    report = GradCheckReport(tol=tol)
    work = {k: v.astype(np.float64).copy() for k, v in params.items()}
    for name in params:
        g_ad = grads[vparams[name].nid]
        arr = work[name]
        worst = 0.0
        flat = arr.reshape(-1)
        gflat = g_ad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = eval_plain(work)
            flat[i] = orig - h
            fm = eval_plain(work)
            flat[i] = orig
            g_fd = (fp - fm) / (2.0 * h)
            err = abs(gflat[i] - g_fd) / max(1.0, abs(gflat[i]), abs(g_fd))
            if err > worst:
                worst = err
        report.errors[name] = worst
    return report
