"""Binary tensor files and checkpoint manifests: exact, ordered, deterministic."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from scsc import serialize as sz
from scsc.arch import build
from scsc.tensor import ShapeError

rng = np.random.default_rng(55)


class TestTensorFile:
    def test_roundtrip_exact(self, tmp_path):
        x = rng.normal(size=(2, 3, 4, 5))
        path = tmp_path / "x.t4"
        sz.dump_tensor(path, x)
        assert_array_equal(sz.load_tensor(path), x)

    def test_layout_on_disk(self, tmp_path):
        x = np.arange(8.0).reshape(1, 2, 2, 2)
        path = tmp_path / "x.t4"
        sz.dump_tensor(path, x)
        raw = path.read_bytes()
        assert raw[:6] == b"SCSCT4"
        assert np.frombuffer(raw[6:22], dtype="<u4").tolist() == [1, 2, 2, 2]
        assert_array_equal(np.frombuffer(raw[22:], dtype="<f8"), np.arange(8.0))

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "x.t4"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(ValueError, match="magic"):
            sz.load_tensor(path)

    def test_truncated_payload_rejected(self, tmp_path):
        x = rng.normal(size=(1, 1, 2, 2))
        path = tmp_path / "x.t4"
        sz.dump_tensor(path, x)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="truncated"):
            sz.load_tensor(path)

    def test_non_rank4_rejected(self, tmp_path):
        with pytest.raises(ShapeError):
            sz.dump_tensor(tmp_path / "x.t4", np.zeros((2, 2)))


class TestCheckpoint:
    def test_roundtrip_order_and_values(self, tmp_path):
        entries = {
            "a.w": rng.normal(size=(3, 4)),
            "a.b": rng.normal(size=4),
            "blk.w": rng.normal(size=(2, 1, 3, 3)),
        }
        path = tmp_path / "ckpt.bin"
        sz.save_checkpoint(path, entries)
        back = sz.load_checkpoint(path)
        assert list(back) == list(entries)
        for k, v in entries.items():
            assert back[k].shape == v.shape
            assert_array_equal(back[k], v)

    def test_byte_determinism(self):
        entries = {"w": rng.normal(size=(2, 2)), "b": rng.normal(size=2)}
        assert sz.checkpoint_bytes(entries) == sz.checkpoint_bytes(dict(entries))

    def test_network_params_roundtrip(self, tmp_path):
        net = build("mobilefacenet-scsc", seed=3)
        path = tmp_path / "net.bin"
        sz.save_checkpoint(path, net.params)
        back = sz.load_checkpoint(path)
        assert list(back) == list(net.params)
        for k in net.params:
            assert_array_equal(back[k], net.params[k])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "ckpt.bin"
        path.write_bytes(b"WRONG!!!" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            sz.load_checkpoint(path)
