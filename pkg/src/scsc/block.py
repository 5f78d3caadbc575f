"""The four-step cross-scale block.

Pipeline: a 1x1 channel reduction to a hidden width, m parallel depthwise
convolutions with distinct odd kernel sizes on the reduced features, a
sigmoid gate map (1x1 conv to m*g channels, then sigmoid) that mixes the
m branches per position and channel group, and a 1x1 channel recovery,
wrapped in a residual connection.

Fusion layout contract: the hidden channels split into g contiguous groups
of size hidden/g; output channel c in group j at position (h, w) is

    sum_i branch_i[n, c, h, w] * gates[n, i*g + j, h, w]

which equals reshaping the stacked branches to (n, g*H*W, hidden/g, m) and
the gates to (n, g*H*W, m, 1) and taking the batched matrix product.

Stride placement: the depthwise branches, the gate path (its 1x1 conv is
strided) and the shortcut projection all apply the block stride, so every
path lands on the same H' x W' grid.  Default norm/act placement mirrors a
residual bottleneck: batchnorm+relu after the reduction, batchnorm after
the recovery, relu after the residual add; the gate path has no norm.  All
sites are toggleable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import ConvSpec, PadMode, ShapeError

KERNEL_MIN = 3
KERNEL_MAX = 13


def round_to_multiple(x: float, k: int) -> int:
    """Nearest positive multiple of ``k`` (at least ``k`` itself)."""
    return max(k, int(math.floor(x / k + 0.5)) * k)


def hidden_width(c_in: int, m: int, g: int, expansion: float = 1.0) -> int:
    """Hidden channel count: expansion * c_in / m, rounded to a multiple of m*g.

    The rounding keeps the gate-group reshape well posed (hidden divisible
    by g) for any branch count.
    """
    return round_to_multiple(expansion * c_in / m, m * g)


@dataclass(frozen=True)
class ScscConfig:
    """All hyperparameters of one block."""

    c_in: int
    c_out: int
    kernels: tuple[int, ...]
    hidden: int
    g: int = 4
    stride: int = 1
    pad: PadMode = PadMode.ZERO
    norm_reduce: bool = True
    act_reduce: bool = True
    norm_recover: bool = True
    act_out: bool = True
    residual: bool = True
    eps: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(int(v) for v in self.kernels))
        if self.c_in < 1 or self.c_out < 1 or self.hidden < 1:
            raise ShapeError("channel counts must be >= 1")
        if len(self.kernels) < 1:
            raise ShapeError("at least one branch kernel is required")
        for v in self.kernels:
            if v % 2 == 0 or not (KERNEL_MIN <= v <= KERNEL_MAX):
                raise ShapeError(
                    f"branch kernels must be odd and in [{KERNEL_MIN}, {KERNEL_MAX}], got {v}"
                )
        if self.g < 1:
            raise ShapeError(f"gate group count must be >= 1, got {self.g}")
        if self.hidden % self.g:
            raise ShapeError(f"hidden width {self.hidden} not divisible by g = {self.g}")
        if self.stride not in (1, 2):
            raise ShapeError(f"stride must be 1 or 2, got {self.stride}")

    @property
    def m(self) -> int:
        return len(self.kernels)

    @property
    def needs_projection(self) -> bool:
        return self.residual and (self.c_in != self.c_out or self.stride != 1)


@dataclass
class ScscParams:
    """Learnable tensors of one block; shapes are fixed by the config.

    - w_reduce (hidden, c_in), b_reduce (hidden,): channel reduction
    - w_branch[i] (hidden, 1, v_i, v_i), b_branch[i] (hidden,): depthwise encoders
    - w_gate (m*g, hidden), b_gate (m*g,): gate generator
    - w_recover (c_out, hidden), b_recover (c_out,): channel recovery
    - reduce/recover gamma, beta: batchnorm affine at the enabled sites
    - w_shortcut (c_out, c_in), b_shortcut: projection when shape changes
    """

    w_reduce: np.ndarray
    b_reduce: np.ndarray
    w_branch: list = field(default_factory=list)
    b_branch: list = field(default_factory=list)
    w_gate: np.ndarray = None
    b_gate: np.ndarray = None
    w_recover: np.ndarray = None
    b_recover: np.ndarray = None
    reduce_gamma: np.ndarray = None
    reduce_beta: np.ndarray = None
    recover_gamma: np.ndarray = None
    recover_beta: np.ndarray = None
    w_shortcut: np.ndarray = None
    b_shortcut: np.ndarray = None

    def named(self, cfg: ScscConfig):
        """(name, tensor) pairs in a fixed order; drives checkpoints and tapes."""
        yield "w_reduce", self.w_reduce
        yield "b_reduce", self.b_reduce
        if cfg.norm_reduce:
            yield "reduce_gamma", self.reduce_gamma
            yield "reduce_beta", self.reduce_beta
        for i in range(cfg.m):
            yield f"w_branch{i}", self.w_branch[i]
            yield f"b_branch{i}", self.b_branch[i]
        yield "w_gate", self.w_gate
        yield "b_gate", self.b_gate
        yield "w_recover", self.w_recover
        yield "b_recover", self.b_recover
        if cfg.norm_recover:
            yield "recover_gamma", self.recover_gamma
            yield "recover_beta", self.recover_beta
        if cfg.needs_projection:
            yield "w_shortcut", self.w_shortcut
            yield "b_shortcut", self.b_shortcut

    @classmethod
    def from_mapping(cls, cfg: ScscConfig, params, prefix: str = ""):
        """Rebind fields from a flat name->tensor mapping (arrays or tape Vars)."""
        get = lambda k: params[prefix + k]
        p = cls(w_reduce=get("w_reduce"), b_reduce=get("b_reduce"))
        if cfg.norm_reduce:
            p.reduce_gamma, p.reduce_beta = get("reduce_gamma"), get("reduce_beta")
        p.w_branch = [get(f"w_branch{i}") for i in range(cfg.m)]
        p.b_branch = [get(f"b_branch{i}") for i in range(cfg.m)]
        p.w_gate, p.b_gate = get("w_gate"), get("b_gate")
        p.w_recover, p.b_recover = get("w_recover"), get("b_recover")
        if cfg.norm_recover:
            p.recover_gamma, p.recover_beta = get("recover_gamma"), get("recover_beta")
        if cfg.needs_projection:
            p.w_shortcut, p.b_shortcut = get("w_shortcut"), get("b_shortcut")
        return p


def fan_in_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_scsc_params(cfg: ScscConfig, rng: np.random.Generator) -> ScscParams:
    """Fan-in-scaled uniform weights, zero biases, identity norm affine.

    The gate bias starts at zero so every gate opens at 0.5: an unbiased
    mix of the branches.
    """
    ch = cfg.hidden
    p = ScscParams(
        w_reduce=fan_in_uniform(rng, (ch, cfg.c_in), cfg.c_in),
        b_reduce=np.zeros(ch),
    )
    if cfg.norm_reduce:
        p.reduce_gamma, p.reduce_beta = np.ones(ch), np.zeros(ch)
    for v in cfg.kernels:
        p.w_branch.append(fan_in_uniform(rng, (ch, 1, v, v), v * v))
        p.b_branch.append(np.zeros(ch))
    p.w_gate = fan_in_uniform(rng, (cfg.m * cfg.g, ch), ch)
    p.b_gate = np.zeros(cfg.m * cfg.g)
    p.w_recover = fan_in_uniform(rng, (cfg.c_out, ch), ch)
    p.b_recover = np.zeros(cfg.c_out)
    if cfg.norm_recover:
        p.recover_gamma, p.recover_beta = np.ones(cfg.c_out), np.zeros(cfg.c_out)
    if cfg.needs_projection:
        p.w_shortcut = fan_in_uniform(rng, (cfg.c_out, cfg.c_in), cfg.c_in)
        p.b_shortcut = np.zeros(cfg.c_out)
    return p


# ---------------------------------------------------------------------------
# fusion forwards (two formulations that must agree)


def fuse_weighted_sum(branches, gates: np.ndarray, groups: int) -> np.ndarray:
    """Per-channel weighted sum over branches; the production formulation."""
    m = len(branches)
    n, c, h, w = branches[0].shape
    if c % groups:
        raise ShapeError(f"channel count {c} not divisible by group count {groups}")
    for b in branches[1:]:
        if b.shape != branches[0].shape:
            raise ShapeError(f"branch shapes disagree: {b.shape} vs {branches[0].shape}")
    if gates.shape != (n, m * groups, h, w):
        raise ShapeError(f"gates must be ({n}, {m * groups}, {h}, {w}), got {gates.shape}")
    stacked = np.stack(branches).reshape(m, n, groups, c // groups, h, w)
    gview = gates.reshape(n, m, groups, h, w)
    out = np.einsum("mngrhw,nmghw->ngrhw", stacked, gview)
    return out.reshape(n, c, h, w)


def fuse_via_matmul(branches, gates: np.ndarray, groups: int) -> np.ndarray:
    """The same fusion through explicit reshapes and a batched matrix product.

    Branch stack -> (n, g*H*W, c/g, m); gates -> (n, g*H*W, m, 1); matmul;
    reshape back.  Kept as an independent route for consistency checks.
    """
    m = len(branches)
    n, c, h, w = branches[0].shape
    cg = c // groups
    # (m,n,c,h,w) -> (n, g, h, w, c/g, m) -> (n*g*h*w, c/g, m)
    stacked = np.stack(branches).reshape(m, n, groups, cg, h, w)
    lhs = stacked.transpose(1, 2, 4, 5, 3, 0).reshape(n * groups * h * w, cg, m)
    # (n, m*g, h, w) -> (n, g, h, w, m) -> (n*g*h*w, m, 1)
    rhs = gates.reshape(n, m, groups, h, w).transpose(0, 2, 3, 4, 1).reshape(n * groups * h * w, m, 1)
    prod = np.einsum("bpq,bqr->bpr", lhs, rhs)
    out = prod.reshape(n, groups, h, w, cg).transpose(0, 1, 4, 2, 3)
    return out.reshape(n, c, h, w)


def fusion_linearity_residual(branches_a, branches_b, gates, groups, alpha, beta) -> float:
    """Max |fuse(a*A + b*B) - (a*fuse(A) + b*fuse(B))| for fixed gates."""
    mixed = [alpha * a + beta * b for a, b in zip(branches_a, branches_b)]
    lhs = fuse_weighted_sum(mixed, gates, groups)
    rhs = alpha * fuse_weighted_sum(branches_a, gates, groups) + beta * fuse_weighted_sum(
        branches_b, gates, groups
    )
    return float(np.abs(lhs - rhs).max())


# ---------------------------------------------------------------------------
# block steps, written once against the ops vocabulary


def _default_ops():
    from .ops import NumpyOps

    return NumpyOps()


def channel_reduce(x, p: ScscParams, cfg: ScscConfig, ops=None):
    """1x1 projection to the hidden width, with the configured norm/act."""
    ops = ops or _default_ops()
    y = ops.pointwise(x, p.w_reduce, p.b_reduce)
    if cfg.norm_reduce:
        y = ops.batchnorm(y, p.reduce_gamma, p.reduce_beta, cfg.eps)
    if cfg.act_reduce:
        y = ops.relu(y)
    return y


def cross_scale_encode(x_d, p: ScscParams, cfg: ScscConfig, ops=None) -> list:
    """m depthwise convolutions with distinct kernels on the same input."""
    ops = ops or _default_ops()
    return [
        ops.depthwise(x_d, p.w_branch[i], p.b_branch[i], ConvSpec(v, cfg.stride, cfg.pad))
        for i, v in enumerate(cfg.kernels)
    ]


def spatial_embed_gates(x_d, p: ScscParams, cfg: ScscConfig, ops=None):
    """Gate maps in (0,1): strided 1x1 conv to m*g channels, then sigmoid."""
    ops = ops or _default_ops()
    z = x_d if cfg.stride == 1 else ops.subsample(x_d, cfg.stride)
    return ops.sigmoid(ops.pointwise(z, p.w_gate, p.b_gate))


def spatial_fuse(branches, gates, g: int, ops=None):
    """Gate-weighted branch mix; see the module docstring for the layout."""
    ops = ops or _default_ops()
    return ops.fuse(branches, gates, g)


def channel_recover(x_e, p: ScscParams, cfg: ScscConfig, ops=None):
    """1x1 projection back to the output width, with the configured norm."""
    ops = ops or _default_ops()
    y = ops.pointwise(x_e, p.w_recover, p.b_recover)
    if cfg.norm_recover:
        y = ops.batchnorm(y, p.recover_gamma, p.recover_beta, cfg.eps)
    return y


def _shortcut(x, p: ScscParams, cfg: ScscConfig, ops):
    if not cfg.needs_projection:
        return x
    z = x if cfg.stride == 1 else ops.subsample(x, cfg.stride)
    return ops.pointwise(z, p.w_shortcut, p.b_shortcut)


def scsc_block_forward(x, p: ScscParams, cfg: ScscConfig, ops=None):
    """Full block: reduce -> encode + gates -> fuse -> recover, plus residual."""
    ops = ops or _default_ops()
    x_d = channel_reduce(x, p, cfg, ops)
    branches = cross_scale_encode(x_d, p, cfg, ops)
    gates = spatial_embed_gates(x_d, p, cfg, ops)
    fused = spatial_fuse(branches, gates, cfg.g, ops)
    y = channel_recover(fused, p, cfg, ops)
    if cfg.residual:
        y = ops.add(y, _shortcut(x, p, cfg, ops))
    if cfg.act_out:
        y = ops.relu(y)
    return y
