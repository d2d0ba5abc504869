"""Protocol equivalence: the bridge must be indistinguishable from a table.

A stub model served by the bridge and a file-backed prediction table holding
the same numbers must yield byte-identical audit reports, because the
auditing client cannot (and must not) care where predictions come from.
"""

import base64
import hashlib
import json
import struct

import numpy as np
import pytest
import requests

from oracle_bridge.config import BridgeConfig
from oracle_bridge.preprocess import preprocess_clip
from oracle_bridge.server import BridgeServer

from videoaudit import (
    AuditConfig,
    FileBackedOracle,
    RemoteOracle,
    audit,
    make_synthetic_dataset,
    prepare_audit,
)

N_C = 10
DIMS = (4, 12, 12, 3)


@pytest.fixture(scope="module")
def publication():
    cfg = AuditConfig(n_c=N_C, r_c=0.5, r_m=0.2, r_r=0.2,
                      selection_seed=3, noise_seed=3)
    samples = make_synthetic_dataset(40, DIMS, N_C, seed=3)
    _, manifest, pair = prepare_audit(samples, cfg)
    return cfg, manifest, pair


def member_score(side):
    return 0.95 if side == "pub" else 0.55


def posterior(label, score):
    probs = [(1.0 - score) / (N_C - 1)] * N_C
    probs[label] = score
    return probs


def build_tables(manifest, pair, tmp_path):
    """One prediction set, expressed both as an id-keyed table and a
    clip-hash-keyed stub table for the bridge."""
    id_table = {}
    clip_table = {}
    t, h, w, _ = DIMS
    for e in manifest.entries:
        for side, video in (("pub", pair.published[e.sample_id]),
                            ("unpub", pair.unpublished[e.sample_id])):
            probs = posterior(e.label, member_score(side))
            id_table[f"{e.sample_id}#{side}"] = {"mode": "full", "probs": probs}
            clip = preprocess_clip(np.asarray(video.data), t, h, w)
            key = hashlib.sha256(np.ascontiguousarray(clip).tobytes()).hexdigest()
            clip_table[key] = probs
    stub_path = tmp_path / "stub_table.json"
    stub_path.write_text(json.dumps(clip_table))
    return id_table, stub_path


def bridge_config(stub_path):
    t, h, w, _ = DIMS
    return BridgeConfig(
        model="oracle_bridge.stubs:clip_table",
        port=0,
        frame_count=t,
        resize_h=h,
        resize_w=w,
        mode="full",
        extras=(("stub_table", str(stub_path)),),
    )


class TestBridgeRoundTrip:
    def test_reports_are_bit_identical(self, publication, tmp_path, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        cfg, manifest, pair = publication
        id_table, stub_path = build_tables(manifest, pair, tmp_path)

        file_report = audit(FileBackedOracle(id_table), manifest, pair, cfg)
        with BridgeServer(bridge_config(stub_path)) as server:
            bridge_report = audit(
                RemoteOracle(server.url, retries=1), manifest, pair, cfg
            )

        assert bridge_report.to_dict() == file_report.to_dict()
        assert json.dumps(bridge_report.to_dict(), sort_keys=True) == \
            json.dumps(file_report.to_dict(), sort_keys=True)
        assert bridge_report.decision == "misuse"

    def test_malformed_payloads_return_400(self, publication, tmp_path):
        _, manifest, pair = publication
        _, stub_path = build_tables(manifest, pair, tmp_path)
        with BridgeServer(bridge_config(stub_path)) as server:
            no_json = requests.post(f"{server.url}/predict",
                                    data=b"pixels", timeout=10)
            truncated = struct.pack("<4sIIII", b"VTR1", 9, 9, 9, 3) + b"\x00"
            bad_vtr = requests.post(
                f"{server.url}/predict",
                json={"id": "x",
                      "video_b64": base64.b64encode(truncated).decode()},
                timeout=10,
            )
        assert no_json.status_code == 400
        assert bad_vtr.status_code == 400
