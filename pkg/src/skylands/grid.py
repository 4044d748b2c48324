"""Scene layout grid synthesis and interpolation.

A seeded, style-modulated convolutional pyramid turns a latent code into
a 256x256x32 feature grid that encodes terrain shape and appearance on
the ground plane.  Weights are untrained: every tensor is a pure
function of the stack's weight seed, so equal inputs always give
bit-identical grids.  Features are queried at continuous world
coordinates by bilinear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ConfigurationError, OutOfBoundsError
from .rng import fan_in_init, keyed_rng, normal

LEAKY_SLOPE = 0.2


@dataclass(frozen=True)
class LatentCode:
    """Latent vector plus the seed it was drawn from."""

    values: np.ndarray
    seed: int

    @classmethod
    def from_seed(cls, seed: int, dim: int = 128) -> "LatentCode":
        return cls(values=normal((dim,), "latent", seed), seed=seed)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class LayerSpec:
    upsample: int
    in_ch: int
    out_ch: int
    kernel: int = 3


@dataclass(frozen=True)
class GeneratorStack:
    """Layered style-modulated generator for the layout grid.

    The constant input is carried through ``layers`` (each an optional
    nearest-neighbour upsample followed by a modulated convolution) and
    a final 1x1 head producing ``output_channels`` features.
    """

    latent_dim: int = 128
    style_dim: int = 128
    mapping_layers: int = 3
    const_res: int = 16
    const_ch: int = 64
    layers: tuple = (
        LayerSpec(1, 64, 64),
        LayerSpec(2, 64, 64),
        LayerSpec(2, 64, 48),
        LayerSpec(2, 48, 32),
        LayerSpec(2, 32, 24),
    )
    output_channels: int = 32
    weight_seed: int = 0

    def __post_init__(self):
        res = self.const_res
        ch = self.const_ch
        for i, spec in enumerate(self.layers):
            if spec.in_ch != ch:
                raise ConfigurationError(f"layer {i}: in_ch {spec.in_ch} != {ch}")
            res *= spec.upsample
            ch = spec.out_ch

    @property
    def output_resolution(self) -> int:
        res = self.const_res
        for spec in self.layers:
            res *= spec.upsample
        return res

    @property
    def receptive_radius(self) -> int:
        """Border contamination radius, in output cells, from same-padding."""
        res = self.const_res
        r = 0
        for spec in self.layers:
            res *= spec.upsample
            r += (spec.kernel // 2) * (self.output_resolution // res)
        return r

    # --- seeded parameters ------------------------------------------------

    def constant_input(self) -> np.ndarray:
        return normal((self.const_res, self.const_res, self.const_ch),
                      "const", self.weight_seed)

    def mapping_weights(self):
        ws = []
        d = self.latent_dim
        for i in range(self.mapping_layers):
            out = self.style_dim
            w = fan_in_init((d, out), d, "map_w", self.weight_seed, i)
            b = np.zeros(out, dtype=np.float32)
            ws.append((w, b))
            d = out
        return ws

    def conv_weights(self, index: int):
        """(conv kernel, bias, style affine) for layer ``index``.

        index in [0, len(layers)) addresses the pyramid; index == -1
        addresses the 1x1 output head.
        """
        if index == -1:
            spec = LayerSpec(1, self.layers[-1].out_ch, self.output_channels, 1)
        else:
            spec = self.layers[index]
        k = spec.kernel
        fan = k * k * spec.in_ch
        w = fan_in_init((k, k, spec.in_ch, spec.out_ch), fan,
                        "conv_w", self.weight_seed, index)
        b = np.zeros(spec.out_ch, dtype=np.float32)
        aff_w = fan_in_init((self.style_dim, spec.in_ch), self.style_dim,
                            "aff_w", self.weight_seed, index)
        aff_b = np.ones(spec.in_ch, dtype=np.float32)
        return w, b, aff_w, aff_b


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    # for 0 < slope < 1 the maximum of the two branches is the leaky value
    return np.maximum(x, np.float32(slope) * x)


def mapping_forward(stack: GeneratorStack, z: np.ndarray) -> np.ndarray:
    """Latent -> style vector (three dense layers, normalized input)."""
    if z.shape[0] != stack.latent_dim:
        raise ConfigurationError(
            f"latent dim {z.shape[0]} != stack latent_dim {stack.latent_dim}")
    x = z.astype(np.float32)
    x = x / np.float32(np.sqrt(np.mean(x * x) + 1e-8))
    for w, b in stack.mapping_weights():
        x = leaky_relu(x @ w + b)
    return x


def _pad2d(x: np.ndarray, r: int, padding: str) -> np.ndarray:
    if r == 0:
        return x
    if padding == "zero":
        return np.pad(x, ((r, r), (r, r), (0, 0)))
    if padding == "wrap":
        return np.pad(x, ((r, r), (r, r), (0, 0)), mode="wrap")
    raise ValueError(f"unknown padding {padding!r}")


def conv2d_same(x: np.ndarray, w: np.ndarray, padding: str = "zero") -> np.ndarray:
    """Same-size conv of (H,W,Cin) with (k,k,Cin,Cout), via k*k shifted matmuls."""
    k = w.shape[0]
    r = k // 2
    h, wd = x.shape[:2]
    xp = _pad2d(x, r, padding)
    out = np.zeros((h * wd, w.shape[3]), dtype=np.float32)
    for dy in range(k):
        for dx in range(k):
            patch = np.ascontiguousarray(xp[dy:dy + h, dx:dx + wd]).reshape(h * wd, -1)
            out += patch @ w[dy, dx]
    return out.reshape(h, wd, -1)


def upsample_nearest(x: np.ndarray, f: int) -> np.ndarray:
    if f == 1:
        return x
    return np.repeat(np.repeat(x, f, axis=0), f, axis=1)


def modulated_conv(x: np.ndarray, style: np.ndarray, weights,
                   padding: str = "zero", demodulate: bool = True) -> np.ndarray:
    """Style-modulated convolution: scale input channels by the style
    affine, convolve, demodulate per output channel, add bias."""
    w, b, aff_w, aff_b = weights
    s = (style @ aff_w + aff_b).astype(np.float32)
    wmod = w * s[None, None, :, None]
    if demodulate:
        d = 1.0 / np.sqrt(np.sum(wmod * wmod, axis=(0, 1, 2)) + 1e-8)
        wmod = wmod * d[None, None, None, :]
    return conv2d_same(x, wmod, padding) + b


def run_layer(stack: GeneratorStack, index: int, x: np.ndarray,
              style: np.ndarray, padding: str = "zero") -> np.ndarray:
    """Apply pyramid layer ``index`` (or the head for -1) fully convolutionally."""
    if index == -1:
        return modulated_conv(x, style, stack.conv_weights(-1), padding)
    spec = stack.layers[index]
    x = upsample_nearest(x, spec.upsample)
    x = modulated_conv(x, style, stack.conv_weights(index), padding)
    return leaky_relu(x)


@dataclass(frozen=True)
class LayoutGrid:
    """2D feature grid with world-space placement.

    Cell (i, j) holds ``features[i, j]``; its center sits at world
    ``(origin_x + (j + 0.5) * cell_width, origin_z + (i + 0.5) * cell_width)``
    with rows indexing z and columns indexing x.
    """

    features: np.ndarray          # (H, W, C)
    cell_width: float = 0.15
    origin: tuple = (0.0, 0.0)    # world (x, z) of the grid corner
    provenance: str = "single-latent"
    border_cells: int = 0         # padding-contaminated margin, informational

    def __post_init__(self):
        h, w = self.features.shape[:2]
        if h < 2 or w < 2:
            raise ConfigurationError("layout grid must be at least 2x2")
        if not self.cell_width > 0:
            raise ConfigurationError("cell_width must be positive")
        if not np.all(np.isfinite(self.features)):
            raise ConfigurationError("layout grid contains non-finite entries")

    @property
    def shape(self):
        return self.features.shape

    @property
    def world_extent(self):
        """((x0, x1), (z0, z1)) covered by the grid."""
        h, w = self.features.shape[:2]
        ox, oz = self.origin
        return ((ox, ox + w * self.cell_width), (oz, oz + h * self.cell_width))


def world_to_grid(grid: LayoutGrid, x, z):
    """World (x, z) -> continuous (row, col) cell coordinates.

    Cell centers map to integer coordinates; exact inverse of
    ``grid_to_world``.
    """
    ox, oz = grid.origin
    col = (np.asarray(x, dtype=np.float64) - ox) / grid.cell_width - 0.5
    row = (np.asarray(z, dtype=np.float64) - oz) / grid.cell_width - 0.5
    return row, col


def grid_to_world(grid: LayoutGrid, row, col):
    ox, oz = grid.origin
    x = (np.asarray(col, dtype=np.float64) + 0.5) * grid.cell_width + ox
    z = (np.asarray(row, dtype=np.float64) + 0.5) * grid.cell_width + oz
    return x, z


def bilinear_cells(features: np.ndarray, row, col) -> np.ndarray:
    """Bilinear read at continuous cell coords, 2x2 neighborhood clamped
    to valid cells so exact-boundary queries succeed."""
    h, w = features.shape[:2]
    row = np.asarray(row, dtype=np.float64)
    col = np.asarray(col, dtype=np.float64)
    r0 = np.clip(np.floor(row), 0, h - 2).astype(np.int64)
    c0 = np.clip(np.floor(col), 0, w - 2).astype(np.int64)
    fr = (row - r0).astype(np.float32)
    fc = (col - c0).astype(np.float32)
    fr = np.clip(fr, 0.0, 1.0)
    fc = np.clip(fc, 0.0, 1.0)
    if features.ndim > 2:
        # one weight per sample, broadcast across the channel axis
        fr = fr[..., None]
        fc = fc[..., None]
    f00 = features[r0, c0]
    f01 = features[r0, c0 + 1]
    f10 = features[r0 + 1, c0]
    f11 = features[r0 + 1, c0 + 1]
    top = f00 * (1 - fc) + f01 * fc
    bot = f10 * (1 - fc) + f11 * fc
    return top * (1 - fr) + bot * fr


def interpolate_feature(grid: LayoutGrid, x, z) -> np.ndarray:
    """Feature vector at world (x, z); raises outside the grid extent."""
    (x0, x1), (z0, z1) = grid.world_extent
    xa = np.asarray(x, dtype=np.float64)
    za = np.asarray(z, dtype=np.float64)
    if np.any(xa < x0) or np.any(xa > x1) or np.any(za < z0) or np.any(za > z1):
        raise OutOfBoundsError(
            f"query outside grid extent x[{x0},{x1}] z[{z0},{z1}]")
    row, col = world_to_grid(grid, xa, za)
    return bilinear_cells(grid.features, row, col)


def synthesize_layout(z: LatentCode, stack: GeneratorStack,
                      padding: str = "zero") -> LayoutGrid:
    """Run the full generator on one latent code.

    ``padding="wrap"`` produces the exactly periodic variant used as the
    reference for extension seam tests.
    """
    style = mapping_forward(stack, z.values)
    x = stack.constant_input()
    for i in range(len(stack.layers)):
        x = run_layer(stack, i, x, style, padding)
    x = run_layer(stack, -1, x, style, padding)
    border = stack.receptive_radius if padding == "zero" else 0
    return LayoutGrid(features=x, provenance="single-latent",
                      border_cells=border)
