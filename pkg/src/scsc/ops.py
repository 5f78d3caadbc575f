"""Execution backends sharing one forward vocabulary.

Model code is written once against this method set and can run three ways:

- ``NumpyOps``    plain arrays in, plain arrays out
- ``TapeOps``     `tape.Var` in/out, recording for reverse-mode gradients
- ``CountingOps`` plain arrays plus a per-call multiply-add counter

Counting conventions (shared with the analytic side in ``complexity``):
dense conv H'*W'*c_out*c_in*v^2, depthwise H'*W'*c*v^2, pointwise
H'*W'*c_in*c_out, linear d_in*d_out, batched matmul B*P*Q*R, branch fusion
H'*W'*c*m.  Counts are per sample; norms, activations, adds, pooling and
data movement count zero.  Biases are not counted.
"""

from __future__ import annotations

import numpy as np

from . import tape as tp
from . import tensor as t
from .tensor import ConvSpec


class NumpyOps:
    """Plain-array execution of the shared forward vocabulary."""

    def dense_conv(self, x, w, b, spec: ConvSpec):
        return t.conv2d_dense(x, w, b, spec)

    def pointwise(self, x, w, b):
        return t.conv2d_pointwise(x, w, b)

    def depthwise(self, x, w, b, spec: ConvSpec):
        return t.conv2d_depthwise(x, w, b, spec)

    def subsample(self, x, stride):
        return t.subsample(x, stride)

    def sigmoid(self, x):
        return t.sigmoid(x)

    def relu(self, x):
        return t.relu(x)

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return a * b

    def scale(self, x, c):
        return x * c

    def sum_all(self, x):
        return np.asarray(x.sum())

    def reshape(self, x, shape):
        return x.reshape(shape)

    def batchnorm(self, x, gamma, beta, eps=1e-5):
        return t.batchnorm_train(x, gamma, beta, eps)

    def layernorm(self, x, gamma, beta, eps=1e-5):
        return t.layernorm_channels(x, gamma, beta, eps)

    def space_to_depth(self, x, r):
        return t.space_to_depth(x, r)

    def global_avg_pool(self, x):
        return t.global_avg_pool(x)

    def linear(self, x, w, b):
        return t.linear(x, w, b)

    def batched_matmul(self, a, b):
        return t.batched_matmul(a, b)

    def fuse(self, branches, gates, groups):
        from .block import fuse_weighted_sum

        return fuse_weighted_sum([np.asarray(b) for b in branches], gates, groups)

    def cross_entropy(self, logits, labels):
        labels = np.asarray(labels)
        n, k = logits.shape
        if labels.shape != (n,):
            raise t.ShapeError(f"labels must be ({n},), got {labels.shape}")
        if labels.min() < 0 or labels.max() >= k:
            raise ValueError(f"labels must lie in [0, {k}), got range [{labels.min()}, {labels.max()}]")
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return np.asarray(-logp[np.arange(n), labels].mean())


class TapeOps:
    """Recording execution: values are ``tape.Var`` handles on one tape."""

    def __init__(self, tape: tp.Tape):
        self.tape = tape

    def leaf(self, value, name=None):
        return self.tape.leaf(value, name)

    def dense_conv(self, x, w, b, spec):
        return tp.conv_dense(x, w, b, spec)

    def pointwise(self, x, w, b):
        return tp.conv_pointwise(x, w, b)

    def depthwise(self, x, w, b, spec):
        return tp.conv_depthwise(x, w, b, spec)

    def subsample(self, x, stride):
        return tp.sub_sample(x, stride)

    def sigmoid(self, x):
        return tp.sigmoid(x)

    def relu(self, x):
        return tp.relu(x)

    def add(self, a, b):
        return tp.add(a, b)

    def mul(self, a, b):
        return tp.mul(a, b)

    def scale(self, x, c):
        return tp.scale(x, c)

    def sum_all(self, x):
        return tp.sum_all(x)

    def reshape(self, x, shape):
        return tp.reshape(x, shape)

    def batchnorm(self, x, gamma, beta, eps=1e-5):
        return tp.batchnorm(x, gamma, beta, eps)

    def layernorm(self, x, gamma, beta, eps=1e-5):
        return tp.layernorm_channels(x, gamma, beta, eps)

    def space_to_depth(self, x, r):
        return tp.space_to_depth(x, r)

    def global_avg_pool(self, x):
        return tp.global_avg_pool(x)

    def linear(self, x, w, b):
        return tp.linear(x, w, b)

    def batched_matmul(self, a, b):
        return tp.matmul_batched(a, b)

    def fuse(self, branches, gates, groups):
        return tp.fuse_branches(branches, gates, groups)

    def cross_entropy(self, logits, labels):
        return tp.cross_entropy(logits, labels)


class CountingOps(NumpyOps):
    """Numpy execution with a multiply-add meter on every counted primitive.

    Counts are per sample, so forwards must run at batch size 1; use
    ``scope`` to attribute counts to named layers.
    """

    def __init__(self, count_fusion: bool = True):
        self.count_fusion = count_fusion
        self.total = 0
        self.by_scope: dict[str, int] = {}
        self._scope = ""

    class _ScopeCtx:
        def __init__(self, ops, name):
            self.ops, self.name = ops, name

        def __enter__(self):
            self.prev = self.ops._scope
            self.ops._scope = self.name

        def __exit__(self, *exc):
            self.ops._scope = self.prev

    def scope(self, name: str):
        return CountingOps._ScopeCtx(self, name)

    def _count(self, madds: int):
        self.total += madds
        if self._scope:
            self.by_scope[self._scope] = self.by_scope.get(self._scope, 0) + madds

    @staticmethod
    def _require_single(x):
        if x.shape[0] != 1:
            raise ValueError("instrumented counting requires batch size 1")

    def dense_conv(self, x, w, b, spec):
        self._require_single(x)
        y = super().dense_conv(x, w, b, spec)
        self._count(y.shape[2] * y.shape[3] * w.shape[0] * w.shape[1] * spec.kernel * spec.kernel)
        return y

    def pointwise(self, x, w, b):
        self._require_single(x)
        y = super().pointwise(x, w, b)
        self._count(y.shape[2] * y.shape[3] * w.shape[0] * w.shape[1])
        return y

    def depthwise(self, x, w, b, spec):
        self._require_single(x)
        y = super().depthwise(x, w, b, spec)
        self._count(y.shape[2] * y.shape[3] * w.shape[0] * spec.kernel * spec.kernel)
        return y

    def linear(self, x, w, b):
        self._require_single(x)
        y = super().linear(x, w, b)
        self._count(w.shape[0] * w.shape[1])
        return y

    def batched_matmul(self, a, b):
        y = super().batched_matmul(a, b)
        self._count(a.shape[0] * a.shape[1] * a.shape[2] * b.shape[2])
        return y

    def fuse(self, branches, gates, groups):
        self._require_single(branches[0])
        y = super().fuse(branches, gates, groups)
        if self.count_fusion:
            self._count(y.shape[2] * y.shape[3] * y.shape[1] * len(branches))
        return y
