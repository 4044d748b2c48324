import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from skylands.service import create_app
from skylands.worldio import decode_float_buffer

from conftest import fast_world


@pytest.fixture(scope="module")
def client():
    world = fast_world(19)
    app = create_app(world=world, config=world.config)
    return TestClient(app)


POSE = {"position": [0.5, 1.5, 0.5], "yaw": 0.3, "pitch": -0.2}


def test_world_info_reports_config(client):
    info = client.get("/world_info").json()
    assert info["near"] == 1.0
    assert info["far"] == 16.0
    assert info["samples_per_ray"] == 32
    assert info["fov_deg"] == 60.0
    assert info["lr_resolution"] == 8
    assert info["upsample_factor"] == 8
    assert info["hr_resolution"] == 64
    assert info["cell_width"] == pytest.approx(0.15)
    assert info["disparity_clip"] == pytest.approx(0.05)
    assert info["disparity_scale"] == pytest.approx(1 / 16)
    assert info["step_len"] == pytest.approx(0.192)
    assert set(info["layers"]) == {"full", "rgb_lr", "disparity", "mask",
                                   "noise", "dome"}


def test_frame_returns_requested_layers(client):
    req = {"pose": POSE, "layers": ["full", "disparity", "mask"],
           "resolution": 16}
    r = client.post("/frame", json=req)
    assert r.status_code == 200
    body = r.json()
    assert set(body["payloads"]) == {"full", "disparity", "mask"}
    assert body["payloads"]["full"]["encoding"] == "png"
    assert body["payloads"]["disparity"]["encoding"] == "fbuf"
    disp = decode_float_buffer(
        base64.b64decode(body["payloads"]["disparity"]["data"]))
    assert disp.shape == (16, 16)
    assert np.isfinite(disp).all()
    assert body["timing_ms"] > 0


def test_frame_idempotent_bytes(client):
    req = {"pose": POSE, "layers": ["full", "disparity"], "resolution": 16}
    a = client.post("/frame", json=req).json()["payloads"]
    b = client.post("/frame", json=req).json()["payloads"]
    for name in a:
        assert a[name]["data"] == b[name]["data"]


def test_extend_grows_extent_and_preserves_frames(client):
    req = {"pose": POSE, "layers": ["disparity"], "resolution": 16}
    before = client.post("/frame", json=req).json()["payloads"]
    e0 = client.get("/world_info").json()["extent"]["chunks"]
    r = client.post("/extend", json={"x0": 30.0, "z0": 30.0,
                                     "x1": 32.0, "z1": 32.0})
    assert r.status_code == 200
    assert r.json()["extent"]["chunks"] > e0
    after = client.post("/frame", json=req).json()["payloads"]
    assert before["disparity"]["data"] == after["disparity"]["data"]


def test_unknown_layer_rejected(client):
    req = {"pose": POSE, "layers": ["sigma"], "resolution": 16}
    r = client.post("/frame", json=req)
    assert r.status_code == 422
    assert "sigma" in r.json()["detail"]


def test_bad_resolution_rejected(client):
    for res in (0, -8, 13):
        r = client.post("/frame", json={"pose": POSE, "resolution": res})
        assert r.status_code == 422


def test_nonfinite_pose_rejected(client):
    body = ('{"pose": {"position": [0.0, NaN, 0.0], "yaw": 0.0,'
            ' "pitch": 0.0}, "resolution": 16}')
    r = client.post("/frame", content=body,
                    headers={"content-type": "application/json"})
    assert r.status_code == 422


def test_malformed_body_rejected(client):
    r = client.post("/frame", json={"pose": {"position": [1.0, 2.0]}})
    assert r.status_code == 422
    r = client.post("/extend", json={"x0": 1.0, "z0": 1.0,
                                     "x1": 0.0, "z1": 2.0})
    assert r.status_code == 422
