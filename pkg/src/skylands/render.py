"""Camera rays, linear depth sampling, and volume rendering.

Rays are cast through pixel centers with a 60 degree vertical FOV and
sampled linearly between the near (1) and far (16) bounds.  Compositing
follows the standard emission-absorption weights
``alpha_i = 1 - exp(-sigma_i * delta_i)``,
``w_i = alpha_i * exp(-sum_{j<i} sigma_j * delta_j)`` and accumulates a
feature image, inverse-distance disparity, the sky mask (total ray
opacity), and the projected ground-plane noise pattern.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import ConfigurationError, OutOfExtentPolicy, RenderConfig
from .world import ProjectionP


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; y is up, the ground plane is the xz-plane.

    ``rotation`` columns are the camera's right, up, and forward axes in
    world space.
    """

    position: np.ndarray                # (3,)
    rotation: np.ndarray                # (3, 3), orthonormal
    fov_deg: float = 60.0
    width: int = 32
    height: int = 32

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        if r.shape != (3, 3) or not np.allclose(r @ r.T, np.eye(3), atol=1e-6):
            raise ConfigurationError("camera rotation must be orthonormal 3x3")
        if not 0 < self.fov_deg < 180:
            raise ConfigurationError("fov must be in (0, 180) degrees")
        if self.width < 1 or self.height < 1:
            raise ConfigurationError("resolution must be at least 1x1")

    @property
    def forward(self) -> np.ndarray:
        return self.rotation[:, 2]

    @classmethod
    def from_yaw_pitch(cls, position, yaw: float, pitch: float,
                       fov_deg: float = 60.0, width: int = 32,
                       height: int = 32) -> "Camera":
        """Yaw about +y (0 faces +z), then pitch about the camera right
        axis; positive pitch looks up."""
        cy, sy = np.cos(yaw), np.sin(yaw)
        cp, sp = np.cos(pitch), np.sin(pitch)
        ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
        rx = np.array([[1, 0, 0], [0, cp, sp], [0, -sp, cp]])
        return cls(position=np.asarray(position, dtype=np.float64),
                   rotation=ry @ rx, fov_deg=fov_deg,
                   width=width, height=height)

    def resized(self, width: int, height: int) -> "Camera":
        return replace(self, width=width, height=height)


def generate_rays(camera: Camera):
    """One unit-direction ray per pixel center.

    Returns (origins (H, W, 3), directions (H, W, 3)).
    """
    h, w = camera.height, camera.width
    tan_v = np.tan(np.deg2rad(camera.fov_deg) / 2)
    tan_h = tan_v * w / h
    xs = (2 * (np.arange(w) + 0.5) / w - 1) * tan_h
    ys = (1 - 2 * (np.arange(h) + 0.5) / h) * tan_v
    dx, dy = np.meshgrid(xs, ys)
    dirs_cam = np.stack([dx, dy, np.ones_like(dx)], axis=-1)
    dirs = dirs_cam @ camera.rotation.T
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    origins = np.broadcast_to(camera.position, dirs.shape)
    return origins, dirs


def sample_ray(near: float = 1.0, far: float = 16.0, n: int = 128):
    """Linearly spaced sample distances and the uniform segment length."""
    if not near < far:
        raise ValueError("need near < far")
    if n < 2:
        raise ValueError("need at least 2 samples per ray")
    t = np.linspace(near, far, n)
    delta = (far - near) / (n - 1)
    return t, delta


def ray_weights(sigma: np.ndarray, delta) -> np.ndarray:
    """Compositing weights for densities (..., N) and segment lengths delta."""
    tau = sigma * delta
    alpha = 1.0 - np.exp(-tau)
    accum = np.cumsum(tau, axis=-1)
    trans = np.exp(-(accum - tau))  # transmittance before each sample
    return alpha * trans


@dataclass
class RenderBuffers:
    """Per-frame volume rendering outputs at the camera resolution."""

    phi: np.ndarray        # (H, W, C) composited color features
    rgb: np.ndarray        # (H, W, 3)
    disparity: np.ndarray  # (H, W)
    mask: np.ndarray       # (H, W) accumulated opacity, 0 = pure sky
    noise: np.ndarray      # (H, W) volume-rendered ground noise

    @property
    def opacity(self) -> np.ndarray:
        return self.mask

    def validate(self):
        for name in ("phi", "rgb", "disparity", "mask", "noise"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite values in {name}")
        if self.mask.min() < 0 or self.mask.max() > 1 + 1e-6:
            raise ValueError("mask out of [0, 1]")
        if self.disparity.min() < 0:
            raise ValueError("negative disparity")
        sky = self.mask < 1e-6
        if np.any(self.disparity[sky] > 1e-6):
            raise ValueError("sky pixels must carry zero disparity")
        return self


def composite_ray(sigma: np.ndarray, delta, disparity: np.ndarray,
                  color: np.ndarray, noise: np.ndarray):
    """Composite one batch of rays.

    sigma, disparity, noise: (R, N); color: (R, N, C).
    Returns (phi (R, C), disp (R,), mask (R,), noise (R,)).
    """
    if not np.all(np.isfinite(sigma)):
        bad = np.argwhere(~np.isfinite(sigma).all(axis=-1)).ravel()
        raise FloatingPointError(f"non-finite density on rays {bad[:8].tolist()}")
    w = ray_weights(sigma, delta)
    phi = np.einsum("rn,rnc->rc", w, color)
    disp = np.sum(w * disparity, axis=-1)
    mask = np.sum(w, axis=-1)
    noi = np.sum(w * noise, axis=-1)
    return phi, disp, mask, noi


def project_rgb(phi: np.ndarray, projection: ProjectionP) -> np.ndarray:
    """Per-pixel affine map of the feature image to RGB."""
    if phi.shape[-1] != projection.matrix.shape[0]:
        raise ConfigurationError(
            f"feature channels {phi.shape[-1]} != projection "
            f"{projection.matrix.shape[0]}")
    return phi @ projection.matrix + projection.offset


def transparency_loss(sigma: np.ndarray, delta, per_ray: bool = False):
    """Diagnostic penalty on visible opacity decreases along rays.

    ``sum_i w_i * max(alpha_{i-1} - alpha_i, 0) / delta_i`` per ray;
    zero exactly when alpha is non-decreasing wherever w_i > 0.
    """
    sigma = np.atleast_2d(sigma)
    delta_arr = np.broadcast_to(np.asarray(delta, dtype=np.float64),
                                sigma.shape)
    alpha = 1.0 - np.exp(-sigma * delta_arr)
    w = ray_weights(sigma, delta_arr)
    drop = np.maximum(alpha[:, :-1] - alpha[:, 1:], 0.0)
    per = np.sum(w[:, 1:] * drop / delta_arr[:, 1:], axis=-1)
    return per if per_ray else float(np.mean(per))


def _render_tile(world, origins, dirs, t, delta, policy):
    """Decode and composite a flat batch of rays."""
    r, n = dirs.shape[0], t.shape[0]
    pos = origins[:, None, :] + t[None, :, None] * dirs[:, None, :]
    flat = pos.reshape(-1, 3)
    color, sigma = world.decode_points(flat, policy=policy)
    noise = world.noise_at(flat[:, 0], flat[:, 2])
    color = color.reshape(r, n, -1)
    sigma = sigma.reshape(r, n).astype(np.float64)
    noise = noise.reshape(r, n)
    disp = (1.0 / t)[None, :]
    return composite_ray(sigma, delta, np.broadcast_to(disp, (r, n)),
                         color, noise)


def render_frame(world, camera: Camera,
                 config: RenderConfig | None = None) -> RenderBuffers:
    """Volume render all buffers for one camera.

    Deterministic for a fixed world; ray tiles are independent, so the
    output does not depend on tile scheduling.
    """
    config = config or getattr(world, "config", None) or RenderConfig()
    origins, dirs = generate_rays(camera)
    t, delta = sample_ray(config.near, config.far, config.samples_per_ray)
    h, w = camera.height, camera.width
    n_rays = h * w
    o_flat = np.ascontiguousarray(origins.reshape(-1, 3))
    d_flat = np.ascontiguousarray(dirs.reshape(-1, 3))
    policy = config.extent_policy

    if policy == OutOfExtentPolicy.AUTO_EXTEND and hasattr(world, "ensure_region"):
        # materialize the frustum footprint up-front so parallel tiles
        # never race on chunk construction
        pts = o_flat[:, None, :] + np.array([config.near, config.far])[None, :, None] \
            * d_flat[:, None, :]
        world.ensure_region(pts[..., 0].min(), pts[..., 2].min(),
                            pts[..., 0].max(), pts[..., 2].max())

    tile = config.ray_tile or n_rays
    spans = [(s, min(s + tile, n_rays)) for s in range(0, n_rays, tile)]

    def work(span):
        s, e = span
        return _render_tile(world, o_flat[s:e], d_flat[s:e], t, delta, policy)

    if config.threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            parts = list(pool.map(work, spans))
    else:
        parts = [work(sp) for sp in spans]

    phi = np.concatenate([p[0] for p in parts]).reshape(h, w, -1)
    disp = np.concatenate([p[1] for p in parts]).reshape(h, w)
    mask = np.concatenate([p[2] for p in parts]).reshape(h, w)
    noise = np.concatenate([p[3] for p in parts]).reshape(h, w)
    rgb = project_rgb(phi, world.projection)
    return RenderBuffers(phi=phi, rgb=rgb, disparity=disp, mask=mask,
                         noise=noise)


def box_downsample(img: np.ndarray, factor: int) -> np.ndarray:
    h, w = img.shape[:2]
    rest = img.shape[2:]
    out = img.reshape(h // factor, factor, w // factor, factor, *rest)
    return out.mean(axis=(1, 3))


def supersample_render(world, camera: Camera, config: RenderConfig | None = None,
                       factor: int = 8) -> RenderBuffers:
    """Render at ``factor`` times the ray density and box-downsample."""
    if factor < 1:
        raise ValueError("supersample factor must be >= 1")
    if factor == 1:
        return render_frame(world, camera, config)
    cam_hi = camera.resized(camera.width * factor, camera.height * factor)
    hi = render_frame(world, cam_hi, config)
    return RenderBuffers(
        phi=box_downsample(hi.phi, factor),
        rgb=box_downsample(hi.rgb, factor),
        disparity=box_downsample(hi.disparity, factor),
        mask=box_downsample(hi.mask, factor),
        noise=box_downsample(hi.noise, factor),
    )
