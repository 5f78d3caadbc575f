"""Parameter and multiply-add accounting for any architecture spec.

Two independent routes must agree exactly:

- the analytic route walks the layer list with closed-form arithmetic
  (``analyze`` / ``count_params`` / ``count_madds``);
- the instrumented route (``oracle_count``) actually runs a batch-1
  forward pass under ``CountingOps``, which meters every primitive call.

"Multiply-adds" (madds) counts one fused multiply-accumulate as one
operation; reports also show 2x madds for consumers who count multiplies
and adds separately.  Norms, activations, sigmoid gates, pooling and
plain adds count zero; the branch-fusion matmul is counted by default and
can be excluded via ``include_fusion=False``.  Counts are per sample.

``REFERENCE_COUNTS`` holds the published complexity figures for the preset
families, used to report per-layer deviations; stems and heads of the
published models are underdocumented, so comparisons carry a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arch import Network, preset
from .ops import CountingOps
from .textutil import format_table


@dataclass(frozen=True)
class LayerCost:
    name: str
    params: int
    madds: int
    out_shape: tuple[int, int, int]


@dataclass(frozen=True)
class CostReport:
    arch: str
    input_hw: tuple[int, int]
    rows: tuple[LayerCost, ...]

    @property
    def total_params(self) -> int:
        return sum(r.params for r in self.rows)

    @property
    def total_madds(self) -> int:
        return sum(r.madds for r in self.rows)


def _as_network(spec_or_name, num_classes=None) -> Network:
    if isinstance(spec_or_name, Network):
        return spec_or_name
    spec = preset(spec_or_name, num_classes) if isinstance(spec_or_name, str) else spec_or_name
    return Network(spec)


def analyze(spec_or_name, input_hw=None, include_fusion: bool = True) -> CostReport:
    """Closed-form per-layer cost table at the given input resolution."""
    net = _as_network(spec_or_name)
    hw = tuple(input_hw or net.spec.default_input)
    shape = (net.spec.input_channels, *hw)
    rows = []
    for layer in net.layers:
        madds = layer.madds(shape, include_fusion)
        shape = layer.out_shape(shape)
        rows.append(LayerCost(layer.name, layer.param_count(), madds, shape))
    return CostReport(net.spec.name, hw, tuple(rows))


def count_params(spec_or_name) -> int:
    """Exact scalar-parameter count, from closed forms (no instantiation)."""
    net = _as_network(spec_or_name)
    return sum(layer.param_count() for layer in net.layers)


def count_madds(spec_or_name, input_hw=None, include_fusion: bool = True) -> int:
    """Per-sample multiply-add count at the given input resolution."""
    return analyze(spec_or_name, input_hw, include_fusion).total_madds


def enumerate_params(net: Network) -> int:
    """Scalar count by enumerating every instantiated tensor."""
    if net.params is None:
        raise RuntimeError("network has no parameters; call initialize() first")
    return sum(arr.size for arr in net.params.values())


def oracle_count(net_or_spec, input_hw=None, include_fusion: bool = True):
    """Instrumented madds: run a batch-1 forward, metering every primitive.

    Returns (total, per_layer_dict).
    """
    net = _as_network(net_or_spec)
    if net.params is None:
        net.initialize(0)
    hw = tuple(input_hw or net.spec.default_input)
    x = np.zeros((1, net.spec.input_channels, *hw))
    ops = CountingOps(count_fusion=include_fusion)
    for layer in net.layers:
        with ops.scope(layer.name):
            x = layer.forward(ops, net.params, x)
    return ops.total, dict(ops.by_scope)


# ---------------------------------------------------------------------------
# published reference figures


@dataclass(frozen=True)
class ReferenceCount:
    params: float
    madds: float
    input_hw: tuple[int, int]


REFERENCE_COUNTS = {
    "resnet-scsc-v1": ReferenceCount(10e6, 1.7e9, (224, 224)),
    "resnet-scsc-v2": ReferenceCount(12e6, 2.2e9, (224, 224)),
    "resnet-scsc-v3": ReferenceCount(25e6, 4.5e9, (224, 224)),
    "swin-scsc": ReferenceCount(22e6, 3.5e9, (224, 224)),
    "faceresnet-scsc": ReferenceCount(8.3e6, 330e6, (96, 96)),
    "mobilefacenet-scsc": ReferenceCount(0.89e6, 146e6, (96, 96)),
}


def reference_deltas(report: CostReport) -> dict | None:
    """Relative deviation of a report's totals from the published figures."""
    ref = REFERENCE_COUNTS.get(report.arch)
    if ref is None or tuple(report.input_hw) != ref.input_hw:
        return None
    return {
        "params_ref": ref.params,
        "madds_ref": ref.madds,
        "params_delta": report.total_params / ref.params - 1.0,
        "madds_delta": report.total_madds / ref.madds - 1.0,
    }


# ---------------------------------------------------------------------------
# rendering


def _human(n: float) -> str:
    for unit, scale in (("G", 1e9), ("M", 1e6), ("K", 1e3)):
        if abs(n) >= scale:
            return f"{n / scale:.2f}{unit}"
    return str(int(n))


def render_report(report: CostReport, compare: bool = True) -> str:
    rows = [
        [r.name, str(r.params), str(r.madds), "x".join(str(d) for d in r.out_shape)]
        for r in report.rows
    ]
    rows.append(["total", str(report.total_params), str(report.total_madds), ""])
    text = f"{report.arch} @ {report.input_hw[0]}x{report.input_hw[1]}\n"
    text += format_table(["layer", "params", "madds", "out (c,h,w)"], rows, right_align={1, 2})
    text += (
        f"totals: params {_human(report.total_params)} | madds {_human(report.total_madds)}"
        f" | 2x madds {_human(2 * report.total_madds)}\n"
    )
    if compare:
        deltas = reference_deltas(report)
        if deltas is not None:
            text += (
                f"published: params {_human(deltas['params_ref'])} ({deltas['params_delta']:+.1%})"
                f" | madds {_human(deltas['madds_ref'])} ({deltas['madds_delta']:+.1%})\n"
            )
    return text


def report_records(report: CostReport) -> str:
    """Machine-readable lines: name, params, madds, shape, tab-separated."""
    lines = [
        "\t".join([r.name, str(r.params), str(r.madds), "x".join(str(d) for d in r.out_shape)])
        for r in report.rows
    ]
    lines.append("\t".join(["total", str(report.total_params), str(report.total_madds), "-"]))
    return "\n".join(lines) + "\n"
