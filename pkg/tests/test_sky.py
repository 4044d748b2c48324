import numpy as np
import pytest

from skylands.render import Camera
from skylands.sky import (SkyDome, composite, load_dome, procedural_dome,
                          render_dome_view, sample_dome)


def test_procedural_dome_deterministic_and_finite():
    a = procedural_dome(3)
    b = procedural_dome(3)
    assert np.array_equal(a.panorama, b.panorama)
    assert a.panorama.min() >= 0 and a.panorama.max() <= 1
    assert not np.array_equal(a.panorama, procedural_dome(4).panorama)


def test_zenith_color_matches_gradient():
    dome = procedural_dome(5, cloud_amplitude=0.0)
    up = sample_dome(dome, np.array([0.0, 1.0, 0.0]))
    np.testing.assert_allclose(up, dome.panorama[0, 0], atol=1e-7)


def test_dome_view_is_translation_invariant():
    dome = procedural_dome(1)
    cam_a = Camera.from_yaw_pitch((0, 1, 0), 0.7, 0.2, width=16, height=16)
    cam_b = Camera.from_yaw_pitch((123.0, 55.0, -9.0), 0.7, 0.2,
                                  width=16, height=16)
    assert np.array_equal(render_dome_view(dome, cam_a),
                          render_dome_view(dome, cam_b))


def test_azimuth_seam_continuity():
    dome = procedural_dome(2)
    # directions straddling azimuth 0/2pi at fixed elevation
    az = np.array([-1e-4, 1e-4])
    dirs = np.stack([np.sin(az) * np.cos(0.3),
                     np.full(2, np.sin(0.3)),
                     np.cos(az) * np.cos(0.3)], axis=-1)
    c = sample_dome(dome, dirs)
    assert np.abs(c[0] - c[1]).max() < 1e-2


def test_below_band_fill_color():
    dome = procedural_dome(6, elevation_min_deg=-15.0)
    down = sample_dome(dome, np.array([[0.0, -1.0, 0.0]]))
    np.testing.assert_allclose(down[0], dome.fill_color)


def test_sample_shapes():
    dome = procedural_dome(0)
    dirs = np.random.default_rng(0).standard_normal((4, 5, 3))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    out = sample_dome(dome, dirs)
    assert out.shape == (4, 5, 3)
    assert np.all(np.isfinite(out))


def test_dome_rejects_non_finite():
    pano = np.zeros((4, 8, 3))
    pano[1, 1, 1] = np.inf
    with pytest.raises(ValueError):
        SkyDome(panorama=pano)


def test_load_dome_round_trip(tmp_path):
    from PIL import Image
    img = (np.random.default_rng(1).uniform(0, 1, (8, 16, 3)) * 255).astype(
        np.uint8)
    p = tmp_path / "sky.png"
    Image.fromarray(img).save(p)
    dome = load_dome(str(p))
    np.testing.assert_allclose(dome.panorama, img / 255.0, atol=1e-7)


def test_composite_blend_arithmetic():
    i_hr = np.zeros((1, 2, 3))
    i_hr[0, :, 0] = 1.0                     # red terrain
    dome = np.zeros((1, 2, 3))
    dome[0, :, 2] = 1.0                     # blue sky
    m = np.array([[0.5, 1.0]])
    out = composite(i_hr, m, dome)
    np.testing.assert_allclose(out[0, 0], [0.5, 0.0, 0.5])
    np.testing.assert_allclose(out[0, 1], [1.0, 0.0, 0.0])


def test_composite_envelope():
    rng = np.random.default_rng(2)
    i_hr = rng.uniform(0, 1, (5, 5, 3))
    dome = rng.uniform(0, 1, (5, 5, 3))
    m = rng.uniform(0, 1, (5, 5))
    out = composite(i_hr, m, dome)
    lo = np.minimum(i_hr, dome)
    hi = np.maximum(i_hr, dome)
    assert np.all(out >= lo - 1e-12)
    assert np.all(out <= hi + 1e-12)


def test_composite_shape_mismatch():
    with pytest.raises(ValueError):
        composite(np.zeros((4, 4, 3)), np.zeros((4, 4)), np.zeros((8, 8, 3)))
