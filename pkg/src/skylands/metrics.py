"""View-consistency metrics and disparity normalization.

One-step consistency backward-warps the rendered view at pose B into
pose A using A's rendered depth and reports the mean L1 difference over
valid pixels, scaled by 100.  Cycle consistency re-renders the starting
pose after a forward-and-back excursion; poses are recomputed from the
trajectory parameters, so a persistent world yields exactly 0.0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .render import Camera, RenderBuffers, generate_rays
from .trajectory import forward_trajectory

SKY_EPS = 1e-6


@dataclass
class WarpResult:
    warped: np.ndarray   # (H, W, C) source image resampled into the target
    valid: np.ndarray    # (H, W) bool, pixels with a usable reprojection


def _cameras_equal(a: Camera, b: Camera) -> bool:
    return (a.width == b.width and a.height == b.height and
            a.fov_deg == b.fov_deg and
            np.array_equal(a.position, b.position) and
            np.array_equal(a.rotation, b.rotation))


def project_points(camera: Camera, points: np.ndarray):
    """World points (..., 3) -> continuous pixel (row, col) and cam depth."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    q = (p - camera.position) @ camera.rotation  # camera-space coords
    depth = q[:, 2]
    tan_v = np.tan(np.deg2rad(camera.fov_deg) / 2)
    tan_h = tan_v * camera.width / camera.height
    with np.errstate(divide="ignore", invalid="ignore"):
        x_ndc = q[:, 0] / depth / tan_h
        y_ndc = q[:, 1] / depth / tan_v
    col = (x_ndc + 1) / 2 * camera.width - 0.5
    row = (1 - y_ndc) / 2 * camera.height - 0.5
    shape = points.shape[:-1]
    return row.reshape(shape), col.reshape(shape), depth.reshape(shape)


def _bilinear_image(img: np.ndarray, row: np.ndarray, col: np.ndarray):
    h, w = img.shape[:2]
    r = np.clip(np.nan_to_num(row), 0, h - 1)
    c = np.clip(np.nan_to_num(col), 0, w - 1)
    r0 = np.clip(np.floor(r).astype(int), 0, max(h - 2, 0))
    c0 = np.clip(np.floor(c).astype(int), 0, max(w - 2, 0))
    fr = (r - r0)[..., None]
    fc = (c - c0)[..., None]
    r1 = min(1, h - 1)
    c1 = min(1, w - 1)
    top = img[r0, c0] * (1 - fc) + img[r0, c0 + c1] * fc
    bot = img[r0 + r1, c0] * (1 - fc) + img[r0 + r1, c0 + c1] * fc
    return top * (1 - fr) + bot * fr


def backward_warp(image_b: np.ndarray, camera_a: Camera, camera_b: Camera,
                  disparity_a: np.ndarray, mask_a: np.ndarray | None = None,
                  eps: float = SKY_EPS) -> WarpResult:
    """Resample ``image_b`` onto camera A's pixel grid.

    Each A pixel is unprojected along its ray to depth 1/disparity and
    reprojected into B.  Valid pixels have positive disparity, land in
    front of B, and fall inside B's frame.  Warping a frame onto its own
    camera is the identity map, so that case returns ``image_b`` as is.
    """
    if image_b.ndim == 2:
        image_b = image_b[:, :, None]
    solid = disparity_a > eps
    if mask_a is not None:
        solid &= mask_a > eps
    if _cameras_equal(camera_a, camera_b):
        return WarpResult(warped=image_b.copy(), valid=solid)
    origins, dirs = generate_rays(camera_a)
    with np.errstate(divide="ignore"):
        t = np.where(solid, 1.0 / np.maximum(disparity_a, eps), 0.0)
    points = origins + t[:, :, None] * dirs
    row, col, depth_b = project_points(camera_b, points)
    hb, wb = image_b.shape[:2]
    in_frame = (row >= 0) & (row <= hb - 1) & (col >= 0) & (col <= wb - 1)
    valid = solid & in_frame & (depth_b > eps)
    warped = _bilinear_image(image_b, row, col)
    warped[~valid] = 0.0
    return WarpResult(warped=warped, valid=valid)


def masked_l1(a: np.ndarray, b: np.ndarray, valid: np.ndarray) -> float:
    """Mean absolute difference over valid pixels, scaled by 100."""
    if not valid.any():
        return float("nan")
    diff = np.abs(a - b)
    if diff.ndim == 3:
        diff = diff.mean(axis=-1)
    return float(100.0 * diff[valid].mean())


def one_step_consistency(render_fn, camera_a: Camera, camera_b: Camera,
                         depth_a: np.ndarray | None = None) -> float:
    """100 x mean L1 between view A and view B warped into A.

    ``render_fn(camera) -> (rgb, disparity, mask)``.  ``depth_a``
    overrides the rendered disparity with an analytic depth map (depth
    along the ray); a zero-length step compares a frame against itself
    and returns exactly 0.0.
    """
    rgb_a, disp_a, mask_a = render_fn(camera_a)
    rgb_b, _, _ = render_fn(camera_b)
    if depth_a is not None:
        with np.errstate(divide="ignore"):
            disp_a = np.where(depth_a > 0, 1.0 / np.maximum(depth_a, 1e-12), 0.0)
    res = backward_warp(rgb_b, camera_a, camera_b, disp_a, mask_a)
    return masked_l1(rgb_a, res.warped, res.valid)


def cycle_consistency(render_fn, start: Camera, steps: int = 100,
                      step_len: float = 0.192) -> float:
    """100 x mean L1 between the start frame and the frame after a
    forward-and-return excursion.

    The return pose is recomputed from the trajectory parameters (index
    0 of a fresh forward trajectory), so it is bit-identical to the
    start pose; a persistent world therefore scores exactly 0.0.  Both
    frames are rendered independently.
    """
    out = forward_trajectory(start, steps, step_len)
    # pose index arithmetic, not accumulated positions: stepping back
    # `steps` times from the end lands on index 0 of the same trajectory
    ret_cam = forward_trajectory(start, steps, step_len).cameras[0]
    rgb_0 = render_fn(out.cameras[0])[0]
    rgb_r = render_fn(ret_cam)[0]
    diff = np.abs(rgb_0 - rgb_r)
    if diff.ndim == 3:
        diff = diff.mean(axis=-1)
    return float(100.0 * diff.mean())


def buffers_render_fn(world, config=None):
    """Adapter: (rgb, disparity, mask) from a low-resolution render."""
    from .render import render_frame

    def fn(camera: Camera):
        buf: RenderBuffers = render_frame(world, camera, config)
        return buf.rgb, buf.disparity, buf.mask
    return fn


def frame_transparency(world, camera: Camera, config=None) -> float:
    """Mean per-ray transparency diagnostic for one camera."""
    from .config import RenderConfig
    from .render import sample_ray, transparency_loss

    config = config or getattr(world, "config", None) or RenderConfig()
    origins, dirs = generate_rays(camera)
    t, delta = sample_ray(config.near, config.far, config.samples_per_ray)
    o = origins.reshape(-1, 3)
    d = dirs.reshape(-1, 3)
    vals = []
    tile = config.ray_tile or len(d)
    for s in range(0, len(d), tile):
        pos = o[s:s + tile, None, :] + t[None, :, None] * d[s:s + tile, None, :]
        _, sigma = world.decode_points(pos.reshape(-1, 3),
                                       policy=config.extent_policy)
        sigma = sigma.reshape(-1, len(t)).astype(np.float64)
        vals.append(transparency_loss(sigma, delta, per_ray=True))
    return float(np.mean(np.concatenate(vals)))


def normalize_disparity(disparity: np.ndarray, mask: np.ndarray,
                        clip_lo: float = 0.05, floor: float = 1.0 / 16.0,
                        p_lo: float = 1.0, p_hi: float = 99.0,
                        sky_eps: float = SKY_EPS) -> np.ndarray:
    """Map non-sky disparity into [1/16, 1]; sky pixels to exactly 0.

    Non-sky values are percentile-normalized, clipped below at
    ``clip_lo``, and affinely mapped so the clip floor lands on 1/16 and
    the top lands on 1.  Already-normalized inputs pass through
    unchanged, so the operation is idempotent.  A degenerate (constant)
    non-sky buffer maps to all ones.
    """
    d = np.asarray(disparity, dtype=np.float64)
    sky = np.asarray(mask) < sky_eps
    solid = ~sky
    out = np.zeros_like(d)
    if not solid.any():
        return out
    vals = d[solid]
    if (np.all(d[sky] == 0.0) and vals.min() >= floor - 1e-12 and
            vals.max() <= 1.0 + 1e-12 and
            abs(vals.min() - floor) < 1e-9 and abs(vals.max() - 1.0) < 1e-9):
        return d.copy()
    lo = np.percentile(vals, p_lo)
    hi = np.percentile(vals, p_hi)
    if hi - lo < 1e-12:
        out[solid] = 1.0
        return out
    norm = np.clip((vals - lo) / (hi - lo), clip_lo, 1.0)
    out[solid] = floor + (norm - clip_lo) * (1.0 - floor) / (1.0 - clip_lo)
    return out
