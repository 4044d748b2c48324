import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skylands.metrics import (backward_warp, cycle_consistency,
                              frame_transparency, masked_l1,
                              normalize_disparity, one_step_consistency,
                              project_points)
from skylands.render import Camera, generate_rays
from skylands.rng import keyed_rng


def down_camera(x, z, height=8.0, res=32):
    return Camera.from_yaw_pitch((x, height, z), 0.0, -np.pi / 2,
                                 width=res, height=res)


def test_project_points_inverts_ray_generation():
    cam = Camera.from_yaw_pitch((1.0, 2.0, 3.0), 0.7, -0.3, width=16, height=12)
    origins, dirs = generate_rays(cam)
    t = 5.0
    pts = origins + t * dirs
    row, col, depth = project_points(cam, pts)
    rr, cc = np.meshgrid(np.arange(12), np.arange(16), indexing="ij")
    np.testing.assert_allclose(row, rr, atol=1e-9)
    np.testing.assert_allclose(col, cc, atol=1e-9)
    assert np.all(depth > 0)


def test_backward_warp_identity_pose_is_exact():
    rng = keyed_rng("warp", 0)
    img = rng.uniform(0, 1, (8, 8, 3))
    disp = rng.uniform(0.1, 0.9, (8, 8))
    cam = down_camera(0.0, 0.0, res=8)
    res = backward_warp(img, cam, cam, disp)
    assert np.array_equal(res.warped, img)
    assert res.valid.all()


def test_backward_warp_known_lateral_shift():
    """Two straight-down cameras over a textured plane: warping B into A
    reproduces A's ground pattern within bilinear tolerance."""
    res_px = 48
    height = 8.0

    def ground_image(cam):
        origins, dirs = generate_rays(cam)
        t = height / -dirs[..., 1]
        pts = origins + t[..., None] * dirs
        img = np.stack([np.sin(1.3 * pts[..., 0]) * np.cos(0.9 * pts[..., 2]),
                        np.cos(0.7 * pts[..., 0] + 0.4 * pts[..., 2]),
                        np.sin(0.5 * pts[..., 2])], axis=-1)
        return img, 1.0 / t

    cam_a = down_camera(0.0, 0.0, height, res_px)
    cam_b = down_camera(1.0, 0.5, height, res_px)
    img_a, disp_a = ground_image(cam_a)
    img_b, _ = ground_image(cam_b)
    out = backward_warp(img_b, cam_a, cam_b, disp_a)
    assert out.valid.mean() > 0.5
    err = np.abs(out.warped - img_a)[out.valid]
    assert np.sqrt((err ** 2).mean()) < 0.02


def test_backward_warp_invalidates_sky_and_out_of_frame():
    img = np.ones((8, 8, 3))
    disp = np.full((8, 8), 0.5)
    disp[0, 0] = 0.0  # sky pixel
    cam_a = down_camera(0.0, 0.0, res=8)
    cam_b = down_camera(500.0, 0.0, res=8)  # far away, nothing lands in frame
    out = backward_warp(img, cam_a, cam_b, disp)
    assert not out.valid[0, 0]
    assert not out.valid.any()
    np.testing.assert_array_equal(out.warped, 0.0)


def test_masked_l1_scaling():
    a = np.zeros((4, 4, 3))
    b = np.full((4, 4, 3), 0.02)
    valid = np.ones((4, 4), bool)
    assert masked_l1(a, b, valid) == pytest.approx(2.0)
    assert np.isnan(masked_l1(a, b, np.zeros((4, 4), bool)))


def synthetic_render_fn():
    """Deterministic pure-function-of-pose renderer (a stand-in world)."""
    def fn(cam):
        origins, dirs = generate_rays(cam)
        t = np.where(dirs[..., 1] < -1e-6, cam.position[1] / -dirs[..., 1],
                     np.inf)
        pts = origins + np.minimum(t, 100.0)[..., None] * dirs
        rgb = np.stack([np.sin(pts[..., 0]), np.cos(pts[..., 2]),
                        np.sin(pts[..., 0] + pts[..., 2])], axis=-1)
        disp = np.where(np.isfinite(t), 1.0 / np.maximum(t, 1e-6), 0.0)
        mask = (disp > 0).astype(np.float64)
        return rgb, disp, mask
    return fn


def test_one_step_zero_step_is_exactly_zero():
    fn = synthetic_render_fn()
    cam = down_camera(2.0, 3.0, res=16)
    assert one_step_consistency(fn, cam, cam) == 0.0


def test_one_step_small_for_consistent_renderer():
    fn = synthetic_render_fn()
    cam_a = down_camera(2.0, 3.0, res=32)
    cam_b = down_camera(2.192, 3.0, res=32)
    val = one_step_consistency(fn, cam_a, cam_b)
    assert 0.0 <= val < 1.0


def test_cycle_consistency_exactly_zero():
    fn = synthetic_render_fn()
    start = Camera.from_yaw_pitch((1.0, 2.0, 0.5), 0.4, -0.6,
                                  width=16, height=16)
    assert cycle_consistency(fn, start, steps=50, step_len=0.192) == 0.0


def test_frame_transparency_nonnegative(flat_oracle_world):
    cam = Camera.from_yaw_pitch((3.0, 3.0, 3.0), 0.2, -0.5, width=6, height=6)
    val = frame_transparency(flat_oracle_world, cam)
    assert np.isfinite(val)
    assert val >= 0


# --- disparity normalization ---------------------------------------------------

def test_normalize_disparity_range_and_sky():
    rng = keyed_rng("disp", 0)
    d = rng.uniform(0.1, 0.9, (20, 20))
    mask = np.ones((20, 20))
    mask[0, :5] = 0.0
    d[0, :5] = 0.0
    out = normalize_disparity(d, mask)
    solid = mask > 0
    assert out[~solid].max() == 0.0
    assert out[solid].min() == pytest.approx(1 / 16, abs=1e-12)
    assert out[solid].max() == pytest.approx(1.0, abs=1e-12)


def test_normalize_disparity_idempotent():
    rng = keyed_rng("disp", 1)
    d = rng.uniform(0.05, 1.2, (16, 16))
    mask = np.ones((16, 16))
    mask[3, 3] = 0.0
    d[3, 3] = 0.0
    once = normalize_disparity(d, mask)
    twice = normalize_disparity(once, mask)
    assert np.array_equal(once, twice)


def test_normalize_disparity_degenerate_constant():
    d = np.full((8, 8), 0.4)
    out = normalize_disparity(d, np.ones((8, 8)))
    np.testing.assert_array_equal(out, 1.0)


def test_normalize_disparity_all_sky():
    out = normalize_disparity(np.zeros((4, 4)), np.zeros((4, 4)))
    np.testing.assert_array_equal(out, 0.0)


@given(st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_normalize_disparity_bounds_property(seed):
    rng = keyed_rng("disp-prop", seed)
    d = rng.uniform(0, 2, (12, 12))
    mask = (rng.uniform(0, 1, (12, 12)) > 0.3).astype(float)
    d = d * mask
    out = normalize_disparity(d, mask)
    solid = mask > 0
    if solid.any():
        assert out[solid].min() >= 1 / 16 - 1e-12
        assert out[solid].max() <= 1.0 + 1e-12
    assert np.all(out[~solid] == 0.0)
