"""HTTP surface: every endpoint through the ASGI test client."""

from fastapi.testclient import TestClient

from scsc.arch import preset, spec_to_text
from scsc.service import app

client = TestClient(app)


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_presets_listing():
    resp = client.get("/presets")
    names = resp.json()["presets"]
    assert "resnet-scsc-v1" in names and "swin-scsc" in names


class TestAnalyze:
    def test_preset_by_name(self):
        resp = client.post("/analyze", json={"arch": "resnet-scsc-v1"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["arch"] == "resnet-scsc-v1"
        assert body["input_hw"] == [224, 224]
        assert body["total_params"] == sum(r["params"] for r in body["rows"])
        assert body["reference"] is not None
        assert "madds" in body["text"]
        assert body["records"].count("\t") > 10

    def test_inline_config(self):
        text = spec_to_text(preset("mobilefacenet-scsc"))
        resp = client.post("/analyze", json={"arch": text, "input_hw": [32, 32]})
        assert resp.status_code == 200
        assert resp.json()["input_hw"] == [32, 32]

    def test_unknown_preset_404(self):
        resp = client.post("/analyze", json={"arch": "nope"})
        assert resp.status_code == 404

    def test_fusion_flag_changes_total(self):
        with_f = client.post("/analyze", json={"arch": "swin-scsc", "include_fusion": True}).json()
        without = client.post("/analyze", json={"arch": "swin-scsc", "include_fusion": False}).json()
        assert with_f["total_madds"] > without["total_madds"]


class TestDescribe:
    def test_table_and_config(self):
        resp = client.post("/describe", json={"arch": "faceresnet-scsc"})
        assert resp.status_code == 200
        body = resp.json()
        assert "stage4" in body["text"]
        assert body["config"].startswith("[net]")

    def test_bad_input_size_422(self):
        resp = client.post("/describe", json={"arch": "swin-scsc", "input_hw": [50, 50]})
        assert resp.status_code == 422


def test_gradcheck_endpoint():
    resp = client.post("/gradcheck", json={"seed": 1, "cases": 1, "tol": 1e-4})
    assert resp.status_code == 200
    body = resp.json()
    assert body["all_passed"] is True
    assert len(body["cases"]) == 1
    assert body["cases"][0]["max_rel_err"] < 1e-4
    assert body["cases"][0]["errors"]


class TestTrain:
    def test_tiny_run(self):
        resp = client.post(
            "/train",
            json={"task": "local", "preset": "resnet-scsc-v1", "steps": 3, "seed": 0, "batch_size": 8},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["curve"]) == 3
        assert body["curve_text"].count("\n") == 3
        assert 0.0 <= body["final_accuracy"] <= 1.0

    def test_bad_task_422(self):
        resp = client.post("/train", json={"task": "imagenet", "steps": 1})
        assert resp.status_code == 422


def test_sweep_endpoint():
    resp = client.post("/sweep", json={"axis": "g", "steps": 2, "seed": 0})
    assert resp.status_code == 200
    body = resp.json()
    assert [r["setting"] for r in body["rows"]] == ["g=2", "g=4", "g=8"]
    assert body["text"].startswith("ablation sweep: axis=g")


def test_sweep_bad_axis_422():
    resp = client.post("/sweep", json={"axis": "depth", "steps": 1})
    assert resp.status_code == 422
