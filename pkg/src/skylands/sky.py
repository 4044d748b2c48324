"""Cylindrical skydome: direction-indexed panorama sampling and compositing.

The dome is an RGB panorama covering 360 degrees of azimuth and a
configurable elevation band (default -15 to +90 degrees).  It sits at
infinity: sampling depends only on ray direction, so camera translation
leaves the dome view bit-identical.  Directions below the covered band
return the fill color.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .render import Camera, generate_rays
from .rng import keyed_rng


@dataclass(frozen=True)
class SkyDome:
    panorama: np.ndarray          # (Hp, Wp, 3) float in [0, 1]
    elevation_min_deg: float = -15.0
    elevation_max_deg: float = 90.0
    fill_color: np.ndarray = None  # color below the covered band
    source: str = "procedural"

    def __post_init__(self):
        if not np.all(np.isfinite(self.panorama)):
            raise ValueError("panorama contains non-finite pixels")
        if self.fill_color is None:
            # horizon row color: bottom row mean
            object.__setattr__(self, "fill_color",
                               self.panorama[-1].mean(axis=0))


def procedural_dome(seed: int = 0, width: int = 512, height: int = 256,
                    elevation_min_deg: float = -15.0,
                    cloud_amplitude: float = 1.0) -> SkyDome:
    """Seeded vertical gradient plus a low-frequency cloud field.

    Built from azimuth-periodic harmonics, so the wraparound seam is
    exact by construction.
    """
    rng = keyed_rng("skydome", seed)
    zenith = rng.uniform(0.1, 0.5, 3)
    zenith[2] = rng.uniform(0.6, 0.95)          # blue-ish up
    horizon = rng.uniform(0.55, 0.95, 3)
    az = 2 * np.pi * (np.arange(width) + 0.5) / width
    elev = np.deg2rad(np.linspace(90.0, elevation_min_deg, height))
    t = ((np.deg2rad(90.0) - elev) /
         (np.deg2rad(90.0) - np.deg2rad(elevation_min_deg)))[:, None, None]
    img = (1 - t) * zenith[None, None, :] + t * horizon[None, None, :]
    cloud = np.zeros((height, width))
    for k in range(1, 4):
        amp = rng.uniform(0.02, 0.06) / k
        ph = rng.uniform(0, 2 * np.pi)
        ve = rng.uniform(1.0, 3.0)
        cloud += amp * np.sin(k * az[None, :] + ph) * np.cos(ve * elev[:, None])
    img = np.clip(img + cloud_amplitude * cloud[:, :, None], 0.0, 1.0)
    return SkyDome(panorama=img, elevation_min_deg=elevation_min_deg,
                   source=f"procedural:{seed}")


def load_dome(path: str, elevation_min_deg: float = -15.0) -> SkyDome:
    """Load a cylindrical panorama from a standard 8-bit image file."""
    img = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64) / 255.0
    return SkyDome(panorama=img, elevation_min_deg=elevation_min_deg,
                   source=f"file:{path}")


def sample_dome(dome: SkyDome, directions: np.ndarray) -> np.ndarray:
    """RGB for unit directions (..., 3); bilinear with azimuthal wraparound."""
    d = np.asarray(directions, dtype=np.float64)
    shape = d.shape[:-1]
    d = d.reshape(-1, 3)
    hp, wp = dome.panorama.shape[:2]
    az = np.arctan2(d[:, 0], d[:, 2])            # 0 faces +z
    elev = np.arcsin(np.clip(d[:, 1], -1.0, 1.0))
    e_max = np.deg2rad(dome.elevation_max_deg)
    e_min = np.deg2rad(dome.elevation_min_deg)
    u = (az / (2 * np.pi)) % 1.0
    v = (e_max - elev) / (e_max - e_min)         # 0 at zenith row
    col = u * wp - 0.5
    row = v * (hp - 1)
    below = elev < e_min
    row_c = np.clip(row, 0, hp - 1)
    r0 = np.clip(np.floor(row_c).astype(int), 0, hp - 2) if hp > 1 else np.zeros(len(d), int)
    fr = (row_c - r0)[:, None]
    c0 = np.floor(col).astype(int)
    fc = (col - c0)[:, None]
    c0w = c0 % wp
    c1w = (c0 + 1) % wp
    pano = dome.panorama
    top = pano[r0, c0w] * (1 - fc) + pano[r0, c1w] * fc
    bot = pano[r0 + 1, c0w] * (1 - fc) + pano[r0 + 1, c1w] * fc
    out = top * (1 - fr) + bot * fr
    out[below] = dome.fill_color
    return out.reshape(*shape, 3)


def render_dome_view(dome: SkyDome, camera: Camera) -> np.ndarray:
    """Per-pixel dome image for the camera; independent of its position."""
    _, dirs = generate_rays(camera)
    return sample_dome(dome, dirs)


def composite(i_hr: np.ndarray, m_hr: np.ndarray,
              i_dome: np.ndarray) -> np.ndarray:
    """Blend refined terrain over the dome: I*M + dome*(1-M) per pixel."""
    if i_hr.shape != i_dome.shape or m_hr.shape != i_hr.shape[:2]:
        raise ValueError("composite inputs must share resolution")
    m = m_hr[:, :, None]
    return i_hr * m + i_dome * (1.0 - m)
