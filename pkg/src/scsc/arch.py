"""Declarative network specs, presets, and instantiated networks.

An ``ArchSpec`` lists a stem, ordered stages, and a head; ``build`` turns
it into a ``Network`` of layers with an ordered flat parameter dict.  The
same layer objects carry the closed-form parameter/multiply-add
arithmetic used by the complexity analyzer, while their ``forward``
methods run under any execution backend (plain, tape, counting).

Stage downsampling is either a stride-2 first block (residual style) or a
patch merge (space-to-depth + linear projection + layernorm, transformer
style).  Every preset halves the spatial size per stage, so stage k ends
at input/(first_rate * 2^(k-1)).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace

import numpy as np

from . import block as blk
from .block import ScscConfig, ScscParams, fan_in_uniform, hidden_width, init_scsc_params
from .tensor import ConvSpec, ShapeError, out_size


@dataclass(frozen=True)
class StageSpec:
    """One stage: a run of blocks at a fixed width, plus how it downsamples."""

    blocks: int
    width: int
    kernels: tuple[int, ...]
    downsample: str = "none"  # none | stride2 | patchmerge
    expansion: float = 1.0
    g: int = 4
    mlp_ratio: int = 0  # > 0: pre-norm transformer block with a channel MLP

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(int(v) for v in self.kernels))
        if self.blocks < 1:
            raise ShapeError(f"stage needs >= 1 blocks, got {self.blocks}")
        if self.downsample not in ("none", "stride2", "patchmerge"):
            raise ShapeError(f"unknown downsample kind {self.downsample!r}")
        # validate the kernel set by constructing a throwaway block config
        ScscConfig(
            c_in=self.width,
            c_out=self.width,
            kernels=self.kernels,
            hidden=hidden_width(self.width, len(self.kernels), self.g, self.expansion),
            g=self.g,
        )


@dataclass(frozen=True)
class ArchSpec:
    """A full network: stem descriptor, ordered stages, head descriptor."""

    name: str
    stem: str  # conv:<width> | patchify:<r> | mobile:<width>
    stages: tuple[StageSpec, ...]
    head: str  # classify:<classes> | embed:<dim> | expand-embed:<mid>:<dim>
    input_channels: int = 3
    default_input: tuple[int, int] = (224, 224)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        for desc, arity in ((self.stem, (2,)), (self.head, (2, 3))):
            parts = desc.split(":")
            if len(parts) not in arity:
                raise ShapeError(f"malformed descriptor {desc!r}")

    @property
    def head_dim(self) -> int:
        return int(self.head.split(":")[-1])


# ---------------------------------------------------------------------------
# layers


class ConvLayer:
    """Dense convolution with optional batchnorm and relu."""

    def __init__(self, name, c_in, c_out, kernel, stride, norm=True, act=True, stage=None):
        self.name, self.stage = name, stage
        self.c_in, self.c_out, self.kernel, self.stride = c_in, c_out, kernel, stride
        self.norm, self.act = norm, act
        self.spec = ConvSpec(kernel, stride)

    def out_shape(self, shape):
        c, h, w = shape
        return (self.c_out, out_size(h, self.stride), out_size(w, self.stride))

    def init_entries(self, rng):
        fan = self.c_in * self.kernel * self.kernel
        entries = [
            (f"{self.name}.w", fan_in_uniform(rng, (self.c_out, self.c_in, self.kernel, self.kernel), fan)),
            (f"{self.name}.b", np.zeros(self.c_out)),
        ]
        if self.norm:
            entries += [(f"{self.name}.gamma", np.ones(self.c_out)), (f"{self.name}.beta", np.zeros(self.c_out))]
        return entries

    def param_count(self):
        n = self.c_out * self.c_in * self.kernel * self.kernel + self.c_out
        return n + (2 * self.c_out if self.norm else 0)

    def madds(self, shape, include_fusion=True):
        _, ho, wo = self.out_shape(shape)
        return ho * wo * self.c_out * self.c_in * self.kernel * self.kernel

    def forward(self, ops, params, x):
        y = ops.dense_conv(x, params[f"{self.name}.w"], params[f"{self.name}.b"], self.spec)
        if self.norm:
            y = ops.batchnorm(y, params[f"{self.name}.gamma"], params[f"{self.name}.beta"])
        if self.act:
            y = ops.relu(y)
        return y


class DwConvLayer:
    """Depthwise convolution with batchnorm and relu (mobile stems)."""

    def __init__(self, name, channels, kernel, stride=1, stage=None):
        self.name, self.stage = name, stage
        self.channels, self.kernel, self.stride = channels, kernel, stride
        self.spec = ConvSpec(kernel, stride)

    def out_shape(self, shape):
        c, h, w = shape
        return (c, out_size(h, self.stride), out_size(w, self.stride))

    def init_entries(self, rng):
        c, k = self.channels, self.kernel
        return [
            (f"{self.name}.w", fan_in_uniform(rng, (c, 1, k, k), k * k)),
            (f"{self.name}.b", np.zeros(c)),
            (f"{self.name}.gamma", np.ones(c)),
            (f"{self.name}.beta", np.zeros(c)),
        ]

    def param_count(self):
        return self.channels * self.kernel * self.kernel + 3 * self.channels

    def madds(self, shape, include_fusion=True):
        _, ho, wo = self.out_shape(shape)
        return ho * wo * self.channels * self.kernel * self.kernel

    def forward(self, ops, params, x):
        y = ops.depthwise(x, params[f"{self.name}.w"], params[f"{self.name}.b"], self.spec)
        y = ops.batchnorm(y, params[f"{self.name}.gamma"], params[f"{self.name}.beta"])
        return ops.relu(y)


class ScscLayer:
    """One cross-scale block (see ``block``)."""

    def __init__(self, name, cfg: ScscConfig, stage=None):
        self.name, self.stage, self.cfg = name, stage, cfg

    def out_shape(self, shape):
        c, h, w = shape
        return (self.cfg.c_out, out_size(h, self.cfg.stride), out_size(w, self.cfg.stride))

    def init_entries(self, rng):
        p = init_scsc_params(self.cfg, rng)
        return [(f"{self.name}.{k}", v) for k, v in p.named(self.cfg)]

    def param_count(self):
        cfg = self.cfg
        ch = cfg.hidden
        n = ch * cfg.c_in + ch  # reduce
        if cfg.norm_reduce:
            n += 2 * ch
        n += sum(ch * v * v + ch for v in cfg.kernels)  # depthwise branches
        n += cfg.m * cfg.g * ch + cfg.m * cfg.g  # gates
        n += cfg.c_out * ch + cfg.c_out  # recover
        if cfg.norm_recover:
            n += 2 * cfg.c_out
        if cfg.needs_projection:
            n += cfg.c_out * cfg.c_in + cfg.c_out
        return n

    def madds(self, shape, include_fusion=True):
        cfg = self.cfg
        _, h, w = shape
        ho, wo = out_size(h, cfg.stride), out_size(w, cfg.stride)
        ch = cfg.hidden
        n = h * w * ch * cfg.c_in  # reduce runs before the stride
        n += sum(ho * wo * ch * v * v for v in cfg.kernels)
        n += ho * wo * cfg.m * cfg.g * ch  # gate conv (strided)
        if include_fusion:
            n += ho * wo * ch * cfg.m
        n += ho * wo * cfg.c_out * ch  # recover
        if cfg.needs_projection:
            n += ho * wo * cfg.c_out * cfg.c_in
        return n

    def forward(self, ops, params, x):
        p = ScscParams.from_mapping(self.cfg, params, prefix=f"{self.name}.")
        return blk.scsc_block_forward(x, p, self.cfg, ops)


class PatchMergeLayer:
    """Space-to-depth over r x r, linear projection, layernorm."""

    def __init__(self, name, c_in, r, dim, stage=None):
        self.name, self.stage = name, stage
        self.c_in, self.r, self.dim = c_in, r, dim

    def out_shape(self, shape):
        c, h, w = shape
        if h % self.r or w % self.r:
            raise ShapeError(f"{self.name}: spatial size {h}x{w} not divisible by {self.r}")
        return (self.dim, h // self.r, w // self.r)

    def init_entries(self, rng):
        fan = self.c_in * self.r * self.r
        return [
            (f"{self.name}.w", fan_in_uniform(rng, (self.dim, fan), fan)),
            (f"{self.name}.b", np.zeros(self.dim)),
            (f"{self.name}.gamma", np.ones(self.dim)),
            (f"{self.name}.beta", np.zeros(self.dim)),
        ]

    def param_count(self):
        return self.dim * self.c_in * self.r * self.r + 3 * self.dim

    def madds(self, shape, include_fusion=True):
        _, ho, wo = self.out_shape(shape)
        return ho * wo * self.dim * self.c_in * self.r * self.r

    def forward(self, ops, params, x):
        y = ops.space_to_depth(x, self.r)
        y = ops.pointwise(y, params[f"{self.name}.w"], params[f"{self.name}.b"])
        return ops.layernorm(y, params[f"{self.name}.gamma"], params[f"{self.name}.beta"])


class SwinBlockLayer:
    """Pre-norm residual pair: cross-scale mixing then a channel MLP.

    x = x + scsc(ln(x)); x = x + mlp(ln(x)).  The block's own 1x1
    reduce/recover act as the usual value projections, so the inner block
    runs bare: no norms, no activation, no residual of its own.
    """

    def __init__(self, name, dim, kernels, g=4, mlp_ratio=4, expansion=1.0, stage=None):
        self.name, self.stage = name, stage
        self.dim, self.mlp_ratio = dim, mlp_ratio
        m = len(kernels)
        self.cfg = ScscConfig(
            c_in=dim,
            c_out=dim,
            kernels=kernels,
            hidden=hidden_width(dim, m, g, expansion),
            g=g,
            stride=1,
            norm_reduce=False,
            act_reduce=False,
            norm_recover=False,
            act_out=False,
            residual=False,
        )
        self._inner = ScscLayer(f"{name}.scsc", self.cfg)

    def out_shape(self, shape):
        return (self.dim, shape[1], shape[2])

    def init_entries(self, rng):
        d, hid = self.dim, self.dim * self.mlp_ratio
        entries = [
            (f"{self.name}.ln1.gamma", np.ones(d)),
            (f"{self.name}.ln1.beta", np.zeros(d)),
        ]
        entries += self._inner.init_entries(rng)
        entries += [
            (f"{self.name}.ln2.gamma", np.ones(d)),
            (f"{self.name}.ln2.beta", np.zeros(d)),
            (f"{self.name}.mlp.w1", fan_in_uniform(rng, (hid, d), d)),
            (f"{self.name}.mlp.b1", np.zeros(hid)),
            (f"{self.name}.mlp.w2", fan_in_uniform(rng, (d, hid), hid)),
            (f"{self.name}.mlp.b2", np.zeros(d)),
        ]
        return entries

    def param_count(self):
        d, hid = self.dim, self.dim * self.mlp_ratio
        return 4 * d + self._inner.param_count() + hid * d + hid + d * hid + d

    def madds(self, shape, include_fusion=True):
        _, h, w = shape
        mlp = 2 * h * w * self.dim * self.dim * self.mlp_ratio
        return self._inner.madds(shape, include_fusion) + mlp

    def forward(self, ops, params, x):
        n = self.name
        y = ops.layernorm(x, params[f"{n}.ln1.gamma"], params[f"{n}.ln1.beta"])
        x = ops.add(x, self._inner.forward(ops, params, y))
        y = ops.layernorm(x, params[f"{n}.ln2.gamma"], params[f"{n}.ln2.beta"])
        y = ops.pointwise(y, params[f"{n}.mlp.w1"], params[f"{n}.mlp.b1"])
        y = ops.relu(y)
        y = ops.pointwise(y, params[f"{n}.mlp.w2"], params[f"{n}.mlp.b2"])
        return ops.add(x, y)


class HeadLayer:
    """Global average pool then a linear map to logits/embedding."""

    def __init__(self, name, c_in, out_dim, stage=None):
        self.name, self.stage = name, stage
        self.c_in, self.out_dim = c_in, out_dim

    def out_shape(self, shape):
        return (self.out_dim, 1, 1)

    def init_entries(self, rng):
        return [
            (f"{self.name}.w", fan_in_uniform(rng, (self.out_dim, self.c_in), self.c_in)),
            (f"{self.name}.b", np.zeros(self.out_dim)),
        ]

    def param_count(self):
        return self.out_dim * self.c_in + self.out_dim

    def madds(self, shape, include_fusion=True):
        return self.out_dim * self.c_in

    def forward(self, ops, params, x):
        y = ops.global_avg_pool(x)
        y = ops.reshape(y, (y.shape[0], self.c_in))
        return ops.linear(y, params[f"{self.name}.w"], params[f"{self.name}.b"])


# ---------------------------------------------------------------------------
# building


def _stem_layers(spec: ArchSpec):
    kind, *args = spec.stem.split(":")
    cin = spec.input_channels
    if kind == "conv":
        width = int(args[0])
        return [
            ConvLayer("stem.conv1", cin, width, 7, 2),
            ConvLayer("stem.conv2", width, width, 3, 2),
        ], width, 4
    if kind == "patchify":
        r = int(args[0])
        dim = spec.stages[0].width
        return [PatchMergeLayer("stem.patchify", cin, r, dim)], dim, r
    if kind == "mobile":
        width = int(args[0])
        return [
            ConvLayer("stem.conv", cin, width, 3, 2),
            DwConvLayer("stem.dwconv", width, 3, 1),
        ], width, 2
    raise ShapeError(f"unknown stem kind {kind!r}")


def _head_layers(spec: ArchSpec, c_in):
    kind, *args = spec.head.split(":")
    if kind in ("classify", "embed"):
        return [HeadLayer("head", c_in, int(args[0]))]
    if kind == "expand-embed":
        mid, dim = int(args[0]), int(args[1])
        return [ConvLayer("head.expand", c_in, mid, 1, 1), HeadLayer("head", mid, dim)]
    raise ShapeError(f"unknown head kind {kind!r}")


class Network:
    """An instantiated ``ArchSpec``: ordered layers plus a flat parameter dict."""

    def __init__(self, spec: ArchSpec):
        self.spec = spec
        self.layers = []
        stem, width, self.stem_rate = _stem_layers(spec)
        self.layers += stem
        for si, stage in enumerate(spec.stages, start=1):
            c_in = width
            first_stride = 1
            if stage.downsample == "patchmerge":
                self.layers.append(PatchMergeLayer(f"stage{si}.merge", c_in, 2, stage.width, stage=si))
                c_in = stage.width
            elif stage.downsample == "stride2":
                first_stride = 2
            for bi in range(stage.blocks):
                name = f"stage{si}.block{bi}"
                stride = first_stride if bi == 0 else 1
                if stage.mlp_ratio > 0:
                    self.layers.append(
                        SwinBlockLayer(
                            name, stage.width, stage.kernels, stage.g, stage.mlp_ratio,
                            stage.expansion, stage=si,
                        )
                    )
                else:
                    cfg = ScscConfig(
                        c_in=c_in,
                        c_out=stage.width,
                        kernels=stage.kernels,
                        hidden=hidden_width(c_in, len(stage.kernels), stage.g, stage.expansion),
                        g=stage.g,
                        stride=stride,
                    )
                    self.layers.append(ScscLayer(name, cfg, stage=si))
                c_in = stage.width
            width = stage.width
        self.layers += _head_layers(spec, width)
        self.params: dict[str, np.ndarray] | None = None
        # last layer index per stage, for shape probes
        self._stage_end = {}
        for i, layer in enumerate(self.layers):
            if layer.stage is not None:
                self._stage_end[layer.stage] = i

    def initialize(self, seed: int = 0) -> "Network":
        rng = np.random.default_rng(seed)
        self.params = {}
        for layer in self.layers:
            for k, v in layer.init_entries(rng):
                self.params[k] = v
        return self

    def forward_with(self, ops, params, x, stage_sink: dict | None = None):
        for i, layer in enumerate(self.layers):
            x = layer.forward(ops, params, x)
            if stage_sink is not None and layer.stage is not None and self._stage_end[layer.stage] == i:
                stage_sink[layer.stage] = x.shape
        return x

    def forward(self, x, stage_sink: dict | None = None):
        from .ops import NumpyOps

        if self.params is None:
            raise RuntimeError("network has no parameters; call initialize() first")
        return self.forward_with(NumpyOps(), self.params, x, stage_sink)

    def out_shapes(self, input_hw) -> list:
        """Analytic per-layer output shapes (c, h, w) for a given input size."""
        shape = (self.spec.input_channels, *input_hw)
        shapes = []
        for layer in self.layers:
            shape = layer.out_shape(shape)
            shapes.append(shape)
        return shapes

    def stage_shapes(self, input_hw) -> dict[int, tuple]:
        shapes = self.out_shapes(input_hw)
        return {s: shapes[i] for s, i in self._stage_end.items()}


def build(spec_or_name, num_classes: int | None = None, seed: int = 0) -> Network:
    """Instantiate a network from an ``ArchSpec`` or a preset name."""
    spec = preset(spec_or_name, num_classes) if isinstance(spec_or_name, str) else spec_or_name
    return Network(spec).initialize(seed)


# ---------------------------------------------------------------------------
# presets


def _resnet_spec(variant: str, num_classes: int) -> ArchSpec:
    kernels = ((3, 9, 13), (3, 7, 11), (3, 5, 7), (3, 5))
    widths = (96, 192, 384, 512)
    blocks = {"v1": (3, 4, 8, 3), "v2": (3, 5, 12, 3), "v3": (3, 5, 12, 3)}[variant]
    expansion = {"v1": 2.0, "v2": 2.0, "v3": 3.0}[variant]
    stages = tuple(
        StageSpec(
            blocks=b,
            width=w,
            kernels=k,
            downsample="none" if i == 0 else "stride2",
            expansion=expansion,
        )
        for i, (b, w, k) in enumerate(zip(blocks, widths, kernels))
    )
    return ArchSpec(f"resnet-scsc-{variant}", "conv:64", stages, f"classify:{num_classes}")


def _swin_spec(num_classes: int) -> ArchSpec:
    kernels = ((3, 11), (3, 9), (3, 7), (3, 5))
    widths = (96, 192, 384, 768)
    blocks = (2, 2, 6, 2)
    stages = tuple(
        StageSpec(
            blocks=b,
            width=w,
            kernels=k,
            downsample="none" if i == 0 else "patchmerge",
            mlp_ratio=4,
        )
        for i, (b, w, k) in enumerate(zip(blocks, widths, kernels))
    )
    return ArchSpec(f"swin-scsc", "patchify:4", stages, f"classify:{num_classes}")


def _faceresnet_spec() -> ArchSpec:
    # stage widths, expansion and head are not pinned down by the published
    # description; this uses the standard residual widths, a 4x hidden
    # expansion, and the usual face-embedding head (1x1 expansion before
    # pooling, then a 512-d embedding), which lands on the published scale
    kernels = ((5, 11), (3, 9), (3, 5), (3, 3))
    widths = (64, 128, 256, 512)
    blocks = (6, 6, 6, 4)
    stages = tuple(
        StageSpec(
            blocks=b,
            width=w,
            kernels=k,
            downsample="none" if i == 0 else "stride2",
            expansion=4.0,
        )
        for i, (b, w, k) in enumerate(zip(blocks, widths, kernels))
    )
    return ArchSpec(
        "faceresnet-scsc", "conv:64", stages, "expand-embed:2048:512", default_input=(96, 96)
    )


def _mobilefacenet_spec() -> ArchSpec:
    # widths follow the base mobile face network (not restated alongside the
    # published block counts); expansion 3 per its design
    kernels = ((3, 9), (3, 7), (3, 7), (3, 5), (3, 5))
    widths = (64, 128, 128, 128, 128)
    blocks = (5, 1, 6, 1, 2)
    down = ("stride2", "stride2", "none", "stride2", "none")
    stages = tuple(
        StageSpec(blocks=b, width=w, kernels=k, downsample=d, expansion=3.0)
        for b, w, k, d in zip(blocks, widths, kernels, down)
    )
    return ArchSpec(
        "mobilefacenet-scsc", "mobile:64", stages, "expand-embed:512:128", default_input=(96, 96)
    )


_PRESETS = {
    "resnet-scsc-v1": lambda k: _resnet_spec("v1", k),
    "resnet-scsc-v2": lambda k: _resnet_spec("v2", k),
    "resnet-scsc-v3": lambda k: _resnet_spec("v3", k),
    "swin-scsc": _swin_spec,
    "faceresnet-scsc": lambda k: _faceresnet_spec(),
    "mobilefacenet-scsc": lambda k: _mobilefacenet_spec(),
}


def preset_names() -> list[str]:
    return list(_PRESETS)


def preset(name: str, num_classes: int | None = None) -> ArchSpec:
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(_PRESETS)}")
    return _PRESETS[name](num_classes if num_classes is not None else 1000)


def build_resnet_scsc(variant: str = "v1", num_classes: int = 1000) -> Network:
    variant = variant.lower()
    if variant not in ("v1", "v2", "v3"):
        raise KeyError(f"unknown variant {variant!r}; expected v1, v2 or v3")
    return build(_resnet_spec(variant, num_classes))


def build_swin_scsc(num_classes: int = 1000) -> Network:
    return build(_swin_spec(num_classes))


def build_face_preset(name: str) -> ArchSpec:
    key = name.lower()
    if key in ("faceresnet-scsc", "faceresnet"):
        return _faceresnet_spec()
    if key in ("mobilefacenet-scsc", "mobilefacenet"):
        return _mobilefacenet_spec()
    raise KeyError(f"unknown face preset {name!r}")


def with_head(spec: ArchSpec, head: str) -> ArchSpec:
    return replace(spec, head=head)


def scale_widths(spec: ArchSpec, factor: float) -> ArchSpec:
    """Shrink/grow every width by ``factor`` (multiples of 8, classifier kept)."""

    def scaled(w):
        return max(8, int(round(w * factor / 8)) * 8)

    kind, *args = spec.stem.split(":")
    stem = spec.stem if kind == "patchify" else f"{kind}:{scaled(int(args[0]))}"
    hkind, *hargs = spec.head.split(":")
    if hkind == "classify":
        head = spec.head
    elif hkind == "embed":
        head = f"embed:{scaled(int(hargs[0]))}"
    else:
        head = f"expand-embed:{scaled(int(hargs[0]))}:{scaled(int(hargs[1]))}"
    stages = tuple(replace(s, width=scaled(s.width)) for s in spec.stages)
    return replace(spec, name=f"{spec.name}-x{factor:g}", stem=stem, stages=stages, head=head)


# ---------------------------------------------------------------------------
# describe / text config


def describe(spec_or_name, input_hw=None) -> str:
    """Per-stage table: downsample rate, output size, kernels, blocks, width."""
    from .textutil import format_table

    spec = preset(spec_or_name) if isinstance(spec_or_name, str) else spec_or_name
    net = Network(spec)
    hw = input_hw or spec.default_input
    stage_shapes = net.stage_shapes(hw)
    rows = []
    rate = net.stem_rate
    for si, stage in enumerate(spec.stages, start=1):
        if stage.downsample != "none":
            rate *= 2
        c, h, w = stage_shapes[si]
        kind = "scsc+mlp" if stage.mlp_ratio else "scsc"
        rows.append(
            [
                f"stage{si}",
                f"{rate}x ({h}x{w})",
                str(stage.blocks),
                str(stage.width),
                "[" + ",".join(str(v) for v in stage.kernels) + "]",
                f"{stage.expansion:g}",
                str(stage.g),
                kind,
            ]
        )
    header = ["stage", "downsp. (out)", "blocks", "width", "kernels", "expand", "g", "block"]
    title = f"{spec.name}  stem={spec.stem}  head={spec.head}  input={hw[0]}x{hw[1]}"
    return title + "\n" + format_table(header, rows)


def spec_to_text(spec: ArchSpec) -> str:
    """Line-oriented config: key = value fields, stages as indexed sections."""
    out = io.StringIO()
    out.write("[net]\n")
    out.write(f"name = {spec.name}\n")
    out.write(f"stem = {spec.stem}\n")
    out.write(f"head = {spec.head}\n")
    out.write(f"input_channels = {spec.input_channels}\n")
    out.write(f"default_input = {spec.default_input[0]}x{spec.default_input[1]}\n")
    for si, st in enumerate(spec.stages, start=1):
        out.write(f"\n[stage{si}]\n")
        out.write(f"blocks = {st.blocks}\n")
        out.write(f"width = {st.width}\n")
        out.write(f"kernels = {','.join(str(v) for v in st.kernels)}\n")
        out.write(f"downsample = {st.downsample}\n")
        out.write(f"expansion = {st.expansion:g}\n")
        out.write(f"g = {st.g}\n")
        out.write(f"mlp_ratio = {st.mlp_ratio}\n")
    return out.getvalue()


def spec_from_text(text: str) -> ArchSpec:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    net = cp["net"]
    stages = []
    for si in range(1, len(cp.sections())):
        st = cp[f"stage{si}"]
        stages.append(
            StageSpec(
                blocks=st.getint("blocks"),
                width=st.getint("width"),
                kernels=tuple(int(v) for v in st["kernels"].split(",")),
                downsample=st.get("downsample", "none"),
                expansion=st.getfloat("expansion", 1.0),
                g=st.getint("g", 4),
                mlp_ratio=st.getint("mlp_ratio", 0),
            )
        )
    h, w = net["default_input"].split("x")
    return ArchSpec(
        name=net["name"],
        stem=net["stem"],
        stages=tuple(stages),
        head=net["head"],
        input_channels=net.getint("input_channels", 3),
        default_input=(int(h), int(w)),
    )
