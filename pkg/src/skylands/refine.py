"""Upsampling refinement of rendered buffers.

Two backends: ``identity`` (pure bilinear 8x upsampling of image,
disparity, and mask -- the default for metric-bearing runs) and a
seeded truncated conv upsampler that consumes the feature image and
injects the projected world-space noise at every scale.  Both are
deterministic; the conv backend exists to exercise the full data path,
not to add fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigurationError
from .grid import conv2d_same, leaky_relu, upsample_nearest
from .render import RenderBuffers
from .rng import fan_in_init, keyed_rng


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Align-corners bilinear resize; source pixels are reproduced
    exactly at aligned output locations."""
    h, w = img.shape[:2]
    rows = np.linspace(0, h - 1, out_h)
    cols = np.linspace(0, w - 1, out_w)
    r0 = np.clip(np.floor(rows).astype(int), 0, h - 2) if h > 1 else np.zeros(out_h, int)
    c0 = np.clip(np.floor(cols).astype(int), 0, w - 2) if w > 1 else np.zeros(out_w, int)
    fr = (rows - r0)[:, None]
    fc = (cols - c0)[None, :]
    if img.ndim == 3:
        fr = fr[:, :, None]
        fc = fc[:, :, None]
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    top = img[np.ix_(r0, c0)] * (1 - fc) + img[np.ix_(r0, c1)] * fc
    bot = img[np.ix_(r1, c0)] * (1 - fc) + img[np.ix_(r1, c1)] * fc
    return top * (1 - fr) + bot * fr


@dataclass
class RefinedBuffers:
    rgb: np.ndarray        # (H, W, 3)
    disparity: np.ndarray  # (H, W), >= 0
    mask: np.ndarray       # (H, W), in [0, 1]

    def validate(self):
        if self.mask.min() < 0 or self.mask.max() > 1:
            raise ValueError("refined mask out of [0, 1]")
        if self.disparity.min() < 0:
            raise ValueError("refined disparity negative")
        for name in ("rgb", "disparity", "mask"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite values in {name}")
        return self


class IdentityRefiner:
    """Bilinear 8x upsampling of I/D/M; ignores the feature image."""

    name = "identity"

    def __init__(self, factor: int = 8):
        self.factor = factor

    def __call__(self, buffers: RenderBuffers) -> RefinedBuffers:
        h, w = buffers.rgb.shape[:2]
        oh, ow = h * self.factor, w * self.factor
        return RefinedBuffers(
            rgb=bilinear_resize(buffers.rgb, oh, ow),
            disparity=bilinear_resize(buffers.disparity, oh, ow),
            mask=bilinear_resize(buffers.mask, oh, ow),
        )


def noise_injection(activations: np.ndarray, noise_img: np.ndarray,
                    scale: float) -> np.ndarray:
    """Add the (resized) projected-noise image, scaled, to every channel."""
    if scale == 0.0:
        return activations
    h, w = activations.shape[:2]
    if noise_img.shape[:2] != (h, w):
        noise_img = bilinear_resize(noise_img, h, w)
    return activations + np.float32(scale) * noise_img[:, :, None]


class ConvRefiner:
    """Seeded truncated conv upsampler with per-layer noise injection.

    Consumes phi + I_LR + D_LR + M_LR, upsamples through log2(factor)
    stages, and emits I/D/M through clamped skip heads.  Weights are a
    pure function of the seed.
    """

    name = "conv"

    def __init__(self, seed: int = 0, factor: int = 8, phi_channels: int = 128,
                 hidden: int = 32):
        if factor & (factor - 1):
            raise ConfigurationError("conv refiner factor must be a power of 2")
        self.seed = seed
        self.factor = factor
        self.phi_channels = phi_channels
        self.hidden = hidden
        self.stages = factor.bit_length() - 1
        self._build()

    def _build(self):
        c_in = self.phi_channels + 5  # phi + rgb + disparity + mask
        self.params = {}
        rng = keyed_rng("refiner-noise", self.seed)
        ch = self.hidden
        self.params["w_in"] = fan_in_init((3, 3, c_in, ch), 9 * c_in,
                                          "ref_in", self.seed)
        self.noise_scales = [float(s) for s in rng.uniform(0.02, 0.1,
                                                           self.stages + 1)]
        for i in range(self.stages):
            self.params[f"w{i}"] = fan_in_init((3, 3, ch, ch), 9 * ch,
                                               "ref_stage", self.seed, i)
        self.params["w_rgb"] = fan_in_init((1, 1, ch, 3), ch, "ref_rgb", self.seed)
        self.params["w_disp"] = fan_in_init((1, 1, ch, 1), ch, "ref_disp", self.seed)
        self.params["w_mask"] = fan_in_init((1, 1, ch, 1), ch, "ref_mask", self.seed)

    def __call__(self, buffers: RenderBuffers) -> RefinedBuffers:
        if buffers.phi.shape[-1] != self.phi_channels:
            raise ConfigurationError(
                f"phi channels {buffers.phi.shape[-1]} != {self.phi_channels}")
        x = np.concatenate([
            buffers.phi,
            buffers.rgb,
            buffers.disparity[:, :, None],
            buffers.mask[:, :, None],
        ], axis=-1).astype(np.float32)
        noise = buffers.noise
        x = leaky_relu(conv2d_same(x, self.params["w_in"]))
        x = noise_injection(x, noise, self.noise_scales[0])
        for i in range(self.stages):
            x = upsample_nearest(x, 2)
            x = leaky_relu(conv2d_same(x, self.params[f"w{i}"]))
            x = noise_injection(x, noise, self.noise_scales[i + 1])
        # skip connections from bilinear upsamples keep the heads anchored
        # to the low-resolution buffers under arbitrary seeded weights
        oh, ow = x.shape[:2]
        rgb = bilinear_resize(buffers.rgb, oh, ow) + conv2d_same(x, self.params["w_rgb"])
        disp = bilinear_resize(buffers.disparity, oh, ow) + \
            conv2d_same(x, self.params["w_disp"])[:, :, 0]
        mask = bilinear_resize(buffers.mask, oh, ow) + \
            conv2d_same(x, self.params["w_mask"])[:, :, 0]
        return RefinedBuffers(
            rgb=rgb,
            disparity=np.maximum(disp, 0.0),
            mask=np.clip(mask, 0.0, 1.0),
        )


def make_refiner(name: str, factor: int = 8, seed: int = 0,
                 phi_channels: int = 128):
    if name == "identity":
        return IdentityRefiner(factor)
    if name == "conv":
        return ConvRefiner(seed=seed, factor=factor, phi_channels=phi_channels)
    raise ConfigurationError(f"unknown refiner backend {name!r}")


def refine(buffers: RenderBuffers, backend) -> RefinedBuffers:
    """Run a refiner backend over rendered buffers."""
    return backend(buffers).validate()


def refinement_consistency_loss(lr: RenderBuffers, hr: RefinedBuffers):
    """(L_consistency, L_sky) diagnostics between LR and refined buffers.

    L_consistency = mean |D_HR - up(D_LR)| + mean |M_HR - up(M_LR)|;
    L_sky = mean exp(-20 * sum_c |I_HR[c]|) * M_HR.
    """
    oh, ow = hr.disparity.shape
    up_d = bilinear_resize(lr.disparity, oh, ow)
    up_m = bilinear_resize(lr.mask, oh, ow)
    l_cons = float(np.mean(np.abs(hr.disparity - up_d)) +
                   np.mean(np.abs(hr.mask - up_m)))
    l_sky = float(np.mean(np.exp(-20.0 * np.sum(np.abs(hr.rgb), axis=-1)) *
                          hr.mask))
    return l_cons, l_sky
