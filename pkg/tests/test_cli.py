"""CLI thin client: in-process dispatch, HTTP dispatch, file outputs."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from scsc import serialize as sz
from scsc.arch import preset, spec_to_text
from scsc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestAnalyze:
    def test_text_output(self, capsys):
        code, out = run(capsys, "analyze", "resnet-scsc-v1")
        assert code == 0
        assert "resnet-scsc-v1 @ 224x224" in out
        assert "totals: params" in out and "published:" in out

    def test_records_output(self, capsys):
        code, out = run(capsys, "analyze", "resnet-scsc-v1", "--input", "64x64", "--format", "records")
        assert code == 0
        lines = out.strip().split("\n")
        assert all(len(l.split("\t")) == 4 for l in lines)
        assert lines[-1].startswith("total\t")

    def test_config_file_input(self, capsys, tmp_path):
        cfg = tmp_path / "arch.ini"
        cfg.write_text(spec_to_text(preset("mobilefacenet-scsc")))
        code, out = run(capsys, "analyze", str(cfg), "--input", "32")
        assert code == 0
        assert "mobilefacenet-scsc @ 32x32" in out

    def test_unknown_preset_exits_with_error(self, capsys):
        with pytest.raises(SystemExit, match="unknown preset"):
            main(["analyze", "not-a-preset"])


def test_describe(capsys):
    code, out = run(capsys, "describe", "swin-scsc", "--config")
    assert code == 0
    assert "stage1" in out and "[3,11]" in out
    assert "[net]" in out


def test_gradcheck(capsys):
    code, out = run(capsys, "gradcheck", "--cases", "1", "--seed", "2")
    assert code == 0
    assert out.startswith("pass")
    assert "all passed" in out


def test_train_toy_writes_curve(capsys, tmp_path):
    curve = tmp_path / "loss.txt"
    code, out = run(
        capsys,
        "train-toy", "--task", "local", "--preset", "resnet-scsc-v1",
        "--steps", "3", "--seed", "0", "--batch-size", "8", "--curve-out", str(curve),
    )
    assert code == 0
    assert "final accuracy" in out
    lines = curve.read_text().strip().split("\n")
    assert len(lines) == 3
    step, loss = lines[0].split()
    assert step == "0" and float(loss) > 0


def test_sweep(capsys):
    code, out = run(capsys, "sweep", "--axis", "g", "--steps", "2")
    assert code == 0
    assert out.startswith("ablation sweep: axis=g")
    for g in (2, 4, 8):
        assert f"g={g}" in out


def test_dump_load_roundtrip(capsys, tmp_path):
    path = tmp_path / "x.t4"
    code, _ = run(capsys, "dump", str(path), "--shape", "2,3,4,4", "--seed", "9")
    assert code == 0
    x = sz.load_tensor(path)
    assert x.shape == (2, 3, 4, 4)
    assert_array_equal(x, np.random.default_rng(9).normal(size=(2, 3, 4, 4)))
    code, out = run(capsys, "load", str(path))
    assert code == 0
    assert "shape (2, 3, 4, 4)" in out


def test_http_dispatch_through_test_transport(capsys, monkeypatch):
    """--server mode: route httpx.post through the ASGI app to prove the wire path."""
    import httpx
    from fastapi.testclient import TestClient

    from scsc.service import app

    tc = TestClient(app)

    def fake_post(url, json=None, timeout=None):
        return tc.post(url.replace("http://svc", ""), json=json)

    monkeypatch.setattr(httpx, "post", fake_post)
    code, out = run(capsys, "--server", "http://svc", "describe", "resnet-scsc-v2")
    assert code == 0
    assert "stage3" in out
