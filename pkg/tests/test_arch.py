"""Preset layouts, shape contracts, differentiability, config round-trips."""

from pathlib import Path

import numpy as np
import pytest
from scsc.arch import (
    ArchSpec,
    Network,
    StageSpec,
    build,
    build_face_preset,
    build_resnet_scsc,
    build_swin_scsc,
    describe,
    preset,
    preset_names,
    scale_widths,
    spec_from_text,
    spec_to_text,
    with_head,
)
from scsc.ops import TapeOps
from scsc.tape import Tape
from scsc.tensor import ShapeError

GOLDEN = Path(__file__).parent / "golden"
FOUR_STAGE_PRESETS = [
    "resnet-scsc-v1",
    "resnet-scsc-v2",
    "resnet-scsc-v3",
    "swin-scsc",
    "faceresnet-scsc",
]

rng = np.random.default_rng(2024)


class TestResnetPresets:
    def test_v1_kernel_sets(self):
        spec = preset("resnet-scsc-v1")
        assert [list(s.kernels) for s in spec.stages] == [[3, 9, 13], [3, 7, 11], [3, 5, 7], [3, 5]]
        assert [s.blocks for s in spec.stages] == [3, 4, 8, 3]
        assert [s.width for s in spec.stages] == [96, 192, 384, 512]
        assert all(s.expansion == 2.0 for s in spec.stages)

    def test_v2_v3_blocks_and_expansion(self):
        v2, v3 = preset("resnet-scsc-v2"), preset("resnet-scsc-v3")
        assert [s.blocks for s in v2.stages] == [3, 5, 12, 3]
        assert [s.blocks for s in v3.stages] == [3, 5, 12, 3]
        assert all(s.expansion == 2.0 for s in v2.stages)
        assert all(s.expansion == 3.0 for s in v3.stages)

    def test_v3_stage_sizes_at_224(self):
        net = Network(preset("resnet-scsc-v3"))
        shapes = net.stage_shapes((224, 224))
        assert [shapes[k][1] for k in sorted(shapes)] == [56, 28, 14, 7]

    def test_v1_forward_smoke(self):
        net = build_resnet_scsc("v1", num_classes=7)
        y = net.forward(rng.normal(size=(1, 3, 64, 64)))
        assert y.shape == (1, 7)
        assert np.all(np.isfinite(y))

    def test_unknown_variant(self):
        with pytest.raises(KeyError):
            build_resnet_scsc("v4")


class TestSwinPreset:
    def test_layout(self):
        spec = preset("swin-scsc")
        assert [list(s.kernels) for s in spec.stages] == [[3, 11], [3, 9], [3, 7], [3, 5]]
        assert [s.blocks for s in spec.stages] == [2, 2, 6, 2]
        assert [s.width for s in spec.stages] == [96, 192, 384, 768]
        assert all(s.mlp_ratio == 4 for s in spec.stages)
        assert spec.stem == "patchify:4"

    def test_forward_smoke(self):
        net = build_swin_scsc(num_classes=5)
        y = net.forward(rng.normal(size=(1, 3, 64, 64)))
        assert y.shape == (1, 5)
        assert np.all(np.isfinite(y))

    def test_indivisible_input_rejected(self):
        net = build_swin_scsc(num_classes=5)
        with pytest.raises(ShapeError, match="divisible"):
            net.forward(rng.normal(size=(1, 3, 50, 50)))


class TestFacePresets:
    def test_faceresnet_layout(self):
        spec = build_face_preset("FaceResNet-SCSC")
        assert [s.blocks for s in spec.stages] == [6, 6, 6, 4]
        assert [list(s.kernels) for s in spec.stages] == [[5, 11], [3, 9], [3, 5], [3, 3]]
        assert spec.default_input == (96, 96)

    def test_mobilefacenet_layout(self):
        spec = build_face_preset("MobileFaceNet-SCSC")
        assert [s.blocks for s in spec.stages] == [5, 1, 6, 1, 2]
        assert [list(s.kernels) for s in spec.stages] == [[3, 9], [3, 7], [3, 7], [3, 5], [3, 5]]
        assert all(s.expansion == 3.0 for s in spec.stages)

    def test_specs_build_and_validate(self):
        for name in ("faceresnet-scsc", "mobilefacenet-scsc"):
            net = build(name)  # construction runs all invariant checks
            assert net.params

    def test_unknown_face_preset(self):
        with pytest.raises(KeyError):
            build_face_preset("resnet")


class TestStageShapes:
    @pytest.mark.parametrize("name", FOUR_STAGE_PRESETS)
    def test_halving_ladder_at_64(self, name):
        net = build(name, num_classes=3)
        sink = {}
        net.forward(rng.normal(size=(1, 3, 64, 64)), stage_sink=sink)
        assert [sink[k][2] for k in sorted(sink)] == [16, 8, 4, 2]
        assert net.stage_shapes((64, 64)) == {k: v[1:] for k, v in sink.items()}

    def test_mobilefacenet_ladder_at_64(self):
        # five stages with two stride-free stages: 16, 8, 8, 4, 4
        net = build("mobilefacenet-scsc")
        sink = {}
        net.forward(rng.normal(size=(1, 3, 64, 64)), stage_sink=sink)
        assert [sink[k][2] for k in sorted(sink)] == [16, 8, 8, 4, 4]


class TestDifferentiability:
    @pytest.mark.parametrize("name", preset_names())
    def test_cross_entropy_backprop_reaches_every_parameter(self, name):
        net = build(name, num_classes=2, seed=1)
        net = Network(with_head(net.spec, "classify:2")).initialize(1)
        tape = Tape()
        ops = TapeOps(tape)
        vparams = {k: tape.leaf(v, name=k) for k, v in net.params.items()}
        x = tape.leaf(rng.normal(size=(2, 3, 32, 32)))
        logits = net.forward_with(ops, vparams, x)
        loss = ops.cross_entropy(logits, np.array([0, 1]))
        grads = tape.backward(loss)
        assert np.isfinite(float(loss.value))
        for k, v in vparams.items():
            g = grads[v.nid]
            assert g.shape == net.params[k].shape
            assert np.all(np.isfinite(g)), f"non-finite gradient in {k}"


class TestDescribeAndConfig:
    @pytest.mark.parametrize("name", preset_names())
    def test_describe_matches_golden(self, name):
        assert describe(name) == (GOLDEN / f"describe_{name}.txt").read_text()

    @pytest.mark.parametrize("name", preset_names())
    def test_config_text_roundtrip(self, name):
        spec = preset(name, num_classes=11)
        assert spec_from_text(spec_to_text(spec)) == spec

    def test_describe_reflects_tabulated_fields(self):
        spec = preset("resnet-scsc-v1")
        text = describe(spec)
        for stage in spec.stages:
            assert f"[{','.join(str(v) for v in stage.kernels)}]" in text
            assert str(stage.width) in text

    def test_custom_spec_roundtrip(self):
        spec = ArchSpec(
            name="custom",
            stem="conv:32",
            stages=(
                StageSpec(blocks=2, width=48, kernels=(3, 7), expansion=1.5),
                StageSpec(blocks=1, width=96, kernels=(5,), downsample="stride2", g=2),
            ),
            head="classify:4",
            default_input=(32, 32),
        )
        back = spec_from_text(spec_to_text(spec))
        assert back == spec
        y = build(back, seed=0).forward(rng.normal(size=(1, 3, 16, 16)))
        assert y.shape == (1, 4)


class TestScaleWidths:
    def test_scaling_keeps_structure(self):
        spec = scale_widths(preset("resnet-scsc-v1"), 0.25)
        assert [s.blocks for s in spec.stages] == [3, 4, 8, 3]
        assert all(s.width % 8 == 0 for s in spec.stages)
        net = build(spec, seed=0)
        y = net.forward(rng.normal(size=(1, 3, 32, 32)))
        assert y.shape == (1, 1000)

    def test_unknown_preset_rejected(self):
        with pytest.raises(KeyError, match="unknown preset"):
            preset("resnet-scsc-v9")
