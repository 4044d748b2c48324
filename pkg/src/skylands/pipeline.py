"""End-to-end frame synthesis: render, refine, composite sky.

``FramePipeline`` bundles a world backend with a refiner and a skydome
and produces every viewer-facing layer for a camera: the low-resolution
buffers, the refined image, the dome view, and the final composite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RenderConfig
from .refine import IdentityRefiner, RefinedBuffers, bilinear_resize, refine
from .render import Camera, RenderBuffers, render_frame, supersample_render
from .sky import SkyDome, composite, procedural_dome, render_dome_view

LAYERS = ("full", "rgb_lr", "disparity", "mask", "noise", "dome")


@dataclass
class Frame:
    """All layers for one pose."""

    camera: Camera
    lr: RenderBuffers
    hr: RefinedBuffers
    dome: np.ndarray        # (H, W, 3) at refined resolution
    full: np.ndarray        # (H, W, 3) terrain over sky

    def layer(self, name: str) -> np.ndarray:
        if name == "full":
            return self.full
        if name == "rgb_lr":
            return self.lr.rgb
        if name == "disparity":
            return self.hr.disparity
        if name == "mask":
            return self.hr.mask
        if name == "noise":
            return self.lr.noise
        if name == "dome":
            return self.dome
        raise KeyError(f"unknown layer {name!r}; choose from {LAYERS}")


class FramePipeline:
    def __init__(self, world, refiner=None, dome: SkyDome | None = None,
                 config: RenderConfig | None = None, supersample: bool = False):
        self.world = world
        self.config = config or getattr(world, "config", None) or RenderConfig()
        self.refiner = refiner or IdentityRefiner(self.config.upsample_factor)
        self.dome = dome or procedural_dome(getattr(world, "world_seed", 0))
        self.supersample = supersample

    def render(self, camera: Camera) -> Frame:
        # the camera carries the output resolution; rays are cast at
        # 1/upsample_factor of it and the refiner brings them back up
        factor = self.config.upsample_factor
        cam_lr = camera.resized(max(camera.width // factor, 1),
                                max(camera.height // factor, 1))
        if self.supersample:
            lr = supersample_render(self.world, cam_lr, self.config,
                                    self.config.supersample_factor)
        else:
            lr = render_frame(self.world, cam_lr, self.config)
        lr.validate()
        hr = refine(lr, self.refiner)
        oh, ow = hr.rgb.shape[:2]
        cam_hr = camera.resized(ow, oh)
        dome_img = render_dome_view(self.dome, cam_hr)
        # display range: terrain features are unbounded, so squash before
        # compositing against the [0, 1] dome
        rgb01 = np.clip(hr.rgb, 0.0, 1.0)
        full = composite(rgb01, hr.mask, dome_img)
        return Frame(camera=camera, lr=lr, hr=hr, dome=dome_img, full=full)


def upsampled_lr_rgb(frame: Frame) -> np.ndarray:
    """Low-resolution RGB brought to the refined resolution for display."""
    oh, ow = frame.hr.rgb.shape[:2]
    return bilinear_resize(frame.lr.rgb, oh, ow)
