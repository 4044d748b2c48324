"""Render and world configuration.

The defaults pin the rendering constants the rest of the engine depends
on: near/far bounds 1 and 16, 128 samples per ray, 60 degree vertical
FOV, a 256-cell layout grid with cell width 0.15 (38.4 world units
across), low-resolution neural rendering at 32x32 upsampled 8x, and the
disparity normalization pair (clip 0.05, scale 1/16).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from enum import Enum


class OutOfExtentPolicy(str, Enum):
    STRICT = "strict"          # raise on samples outside materialized extent
    EMPTY = "empty"            # out-of-extent samples decode to sigma = 0
    AUTO_EXTEND = "auto_extend"  # materialize chunks on demand


@dataclass(frozen=True)
class RenderConfig:
    near: float = 1.0
    far: float = 16.0
    samples_per_ray: int = 128
    fov_deg: float = 60.0
    lr_resolution: int = 32
    upsample_factor: int = 8
    supersample_factor: int = 8
    layout_resolution: int = 256
    cell_width: float = 0.15
    feature_channels: int = 32
    color_feature_channels: int = 128
    disparity_clip: float = 0.05
    disparity_scale: float = 1.0 / 16.0
    lambda_consistency: float = 5.0
    lambda_sky: float = 100.0
    extent_policy: OutOfExtentPolicy = OutOfExtentPolicy.AUTO_EXTEND
    # ray tile size for chunked decoding; 0 = whole frame in one pass
    ray_tile: int = 32  # rays per decode batch; small tiles stay in cache
    threads: int = 1

    @property
    def hr_resolution(self) -> int:
        return self.lr_resolution * self.upsample_factor

    @property
    def grid_world_extent(self) -> float:
        return self.layout_resolution * self.cell_width

    def to_dict(self) -> dict:
        d = asdict(self)
        d["extent_policy"] = self.extent_policy.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RenderConfig":
        d = dict(d)
        if "extent_policy" in d:
            d["extent_policy"] = OutOfExtentPolicy(d["extent_policy"])
        return cls(**d)


class ConfigurationError(ValueError):
    """Raised when shapes/dimensions of configured components disagree."""


class OutOfBoundsError(ValueError):
    """Raised on queries outside a grid's world extent (strict mode)."""
