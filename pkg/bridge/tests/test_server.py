import base64
import json
import struct

import numpy as np
import pytest
import requests

from oracle_bridge.config import BridgeConfig
from oracle_bridge.preprocess import preprocess_clip, sample_frame_indices
from oracle_bridge.server import BridgeServer
from oracle_bridge.vtr import VtrFormatError, decode_vtr


def vtr_bytes(video: np.ndarray) -> bytes:
    t, h, w, c = video.shape
    return struct.pack("<4sIIII", b"VTR1", t, h, w, c) + video.tobytes()


def make_video(t=4, h=16, w=16, c=3, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(t, h, w, c), dtype=np.uint8)


def post_predict(url, body):
    if isinstance(body, dict):
        return requests.post(f"{url}/predict", json=body, timeout=10)
    return requests.post(f"{url}/predict", data=body, timeout=10)


def predict_body(video):
    return {
        "id": "probe",
        "video_b64": base64.b64encode(vtr_bytes(video)).decode(),
    }


def fixed_config(**overrides):
    kwargs = dict(
        model="oracle_bridge.stubs:fixed_vector",
        port=0,
        frame_count=4,
        resize_h=16,
        resize_w=16,
        extras=(("stub_probs", "0.7,0.2,0.1"),),
    )
    kwargs.update(overrides)
    return BridgeConfig(**kwargs)


class TestVtrDecode:
    def test_round_trip(self):
        video = make_video()
        assert np.array_equal(decode_vtr(vtr_bytes(video)), video)

    def test_wrong_magic(self):
        blob = bytearray(vtr_bytes(make_video()))
        blob[:4] = b"AVI0"
        with pytest.raises(VtrFormatError):
            decode_vtr(bytes(blob))

    def test_truncated(self):
        with pytest.raises(VtrFormatError):
            decode_vtr(vtr_bytes(make_video())[:-1])

    def test_bad_channels(self):
        video = make_video()
        blob = struct.pack("<4sIIII", b"VTR1", 4, 16, 16, 2) + video.tobytes()
        with pytest.raises(VtrFormatError):
            decode_vtr(blob)


class TestPreprocess:
    def test_indices_even_coverage(self):
        idx = sample_frame_indices(10, 4)
        assert idx.tolist() == [0, 3, 6, 9]

    def test_indices_repeat_when_short(self):
        idx = sample_frame_indices(2, 5)
        assert idx.min() == 0 and idx.max() == 1 and len(idx) == 5

    def test_deterministic(self):
        assert np.array_equal(sample_frame_indices(30, 16),
                              sample_frame_indices(30, 16))

    def test_identity_preprocess(self):
        video = make_video()
        clip = preprocess_clip(video, 4, 16, 16)
        assert clip.shape == (4, 16, 16, 3)
        assert clip.dtype == np.float32
        assert np.array_equal(clip, video.astype(np.float32) / 255.0)

    def test_resize_and_grayscale(self):
        video = make_video(c=1)
        clip = preprocess_clip(video, 2, 8, 12)
        assert clip.shape == (2, 8, 12, 1)
        assert clip.min() >= 0.0 and clip.max() <= 1.0


class TestServerFullMode:
    def test_healthz(self):
        with BridgeServer(fixed_config()) as server:
            resp = requests.get(f"{server.url}/healthz", timeout=10)
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_round_trip_exact_vector(self):
        with BridgeServer(fixed_config()) as server:
            resp = post_predict(server.url, predict_body(make_video()))
        assert resp.status_code == 200
        assert resp.json() == {"mode": "full", "probs": [0.7, 0.2, 0.1]}

    def test_class_order_preserved(self):
        increasing = ",".join(str((i + 1) / 55) for i in range(10))
        cfg = fixed_config(extras=(("stub_probs", increasing),))
        with BridgeServer(cfg) as server:
            resp = post_predict(server.url, predict_body(make_video()))
        probs = resp.json()["probs"]
        assert probs == sorted(probs)
        assert probs[0] == pytest.approx(1 / 55)

    def test_unknown_path_404(self):
        with BridgeServer(fixed_config()) as server:
            resp = requests.post(f"{server.url}/classify", data=b"{}", timeout=10)
        assert resp.status_code == 404


class TestServerModes:
    def test_topk_ranks_complete(self):
        cfg = fixed_config(
            mode="topk", k=5, n_c=10,
            extras=(("stub_probs",
                     "0.05,0.30,0.02,0.20,0.01,0.15,0.04,0.10,0.08,0.05"),),
        )
        with BridgeServer(cfg) as server:
            resp = post_predict(server.url, predict_body(make_video()))
        entries = resp.json()["topk"]
        assert [e["rank"] for e in entries] == [1, 2, 3, 4, 5]
        assert len({e["label"] for e in entries}) == 5
        assert entries[0]["label"] == 1  # the 0.30 class

    def test_label_mode_argmax(self):
        cfg = fixed_config(mode="label",
                           extras=(("stub_probs", "0.1,0.8,0.1"),))
        with BridgeServer(cfg) as server:
            resp = post_predict(server.url, predict_body(make_video()))
        assert resp.json() == {"mode": "label", "label": 1}


class TestServerErrorPaths:
    @pytest.fixture()
    def server(self):
        with BridgeServer(fixed_config()) as srv:
            yield srv

    def test_non_json_body_400(self, server):
        resp = post_predict(server.url, b"video bytes, honest")
        assert resp.status_code == 400

    def test_missing_video_field_400(self, server):
        resp = post_predict(server.url, {"id": "x"})
        assert resp.status_code == 400

    def test_bad_base64_400(self, server):
        resp = post_predict(server.url, {"id": "x", "video_b64": "@@@not64@@@"})
        assert resp.status_code == 400

    def test_truncated_vtr_400(self, server):
        blob = vtr_bytes(make_video())[:-7]
        resp = post_predict(
            server.url,
            {"id": "x", "video_b64": base64.b64encode(blob).decode()},
        )
        assert resp.status_code == 400
        assert "VTR1" in resp.json()["error"]

    def test_wrong_magic_400(self, server):
        blob = bytearray(vtr_bytes(make_video()))
        blob[:4] = b"MP42"
        resp = post_predict(
            server.url,
            {"id": "x", "video_b64": base64.b64encode(bytes(blob)).decode()},
        )
        assert resp.status_code == 400

    def test_model_exception_500_opaque(self, tmp_path):
        table = tmp_path / "empty.json"
        table.write_text("{}")
        cfg = fixed_config(
            model="oracle_bridge.stubs:clip_table",
            extras=(("stub_table", str(table)),),
        )
        with BridgeServer(cfg) as server:
            resp = post_predict(server.url, predict_body(make_video()))
        assert resp.status_code == 500
        assert resp.json() == {"error": "inference failed"}

    def test_class_count_mismatch_500(self):
        cfg = fixed_config(n_c=5)  # stub returns 3 classes
        with BridgeServer(cfg) as server:
            resp = post_predict(server.url, predict_body(make_video()))
        assert resp.status_code == 500
