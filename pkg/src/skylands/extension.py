"""Layout extension by blended multi-latent synthesis and overlap-add stitching.

A lattice of latent codes (one per layout tile) is turned into an
arbitrarily large feature grid: each 2x2 sub-lattice window is
synthesized by applying every generator layer fully convolutionally four
times (once per corner code) and blending the results with bilinear
weights; overlapping window outputs are then stitched with linearly
decaying weights.  The weight profile is zero inside each window's
padding-contaminated margin, so stitched interiors are free of border
artifacts, and windows are pure functions of (world seed, position),
making extension order-independent and persistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigurationError
from .grid import (GeneratorStack, LatentCode, LayoutGrid, mapping_forward,
                   run_layer)
from .rng import keyed_rng, normal

CORNERS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class BlendWeights:
    b00: float
    b01: float
    b10: float
    b11: float

    def as_tuple(self):
        return (self.b00, self.b01, self.b10, self.b11)


def blend_weights(u: float, v: float) -> BlendWeights:
    """Bilinear corner weights for normalized sub-grid coords u, v in [0,1].

    u runs along rows (corner index's first digit), v along columns.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.any(u < 0) or np.any(u > 1) or np.any(v < 0) or np.any(v > 1):
        raise ValueError("blend coordinates must lie in [0, 1]")
    return BlendWeights(
        b00=(1 - u) * (1 - v),
        b01=(1 - u) * v,
        b10=u * (1 - v),
        b11=u * v,
    )


def _beta_fields(size: int) -> np.ndarray:
    """(size, size, 4) bilinear fields; corners hit 0/1 exactly."""
    t = np.linspace(0.0, 1.0, size, dtype=np.float64)
    u = t[:, None]
    v = t[None, :]
    beta = np.stack([(1 - u) * (1 - v), (1 - u) * v,
                     u * (1 - v), u * v], axis=-1)
    return beta.astype(np.float32)


def corner_styles(stack: GeneratorStack, corner_codes) -> list:
    if len(corner_codes) != 4:
        raise ConfigurationError("need exactly 4 corner codes")
    dims = {c.dim for c in corner_codes}
    if dims != {stack.latent_dim}:
        raise ConfigurationError(f"corner code dims {dims} != {stack.latent_dim}")
    return [mapping_forward(stack, c.values) for c in corner_codes]


def blended_layer(f: np.ndarray, styles, stack: GeneratorStack,
               index: int) -> np.ndarray:
    """One generator layer under four corner styles, blended bilinearly."""
    outs = [run_layer(stack, index, f, s) for s in styles]
    beta = _beta_fields(outs[0].shape[0])
    acc = beta[:, :, 0:1] * outs[0]
    for k in range(1, 4):
        acc += beta[:, :, k:k + 1] * outs[k]
    return acc


def synthesize_subgrid(corner_codes, stack: GeneratorStack) -> np.ndarray:
    """2H x 2W feature block from a 2x2 window of latent codes.

    Starts from the 2x2-tiled constant input and repeats the blended
    layer application through the whole pyramid and the output head.
    """
    styles = corner_styles(stack, corner_codes)
    const = stack.constant_input()
    f = np.concatenate([np.concatenate([const, const], axis=1)] * 2, axis=0)
    for i in range(len(stack.layers)):
        f = blended_layer(f, styles, stack, i)
    return blended_layer(f, styles, stack, -1)


# --- overlap-add stitching -------------------------------------------------

def stitch_profile(size: int, margin: int, first: bool = False,
                   last: bool = False) -> np.ndarray:
    """Per-cell stitch weight along one axis of a window.

    Linear decay to zero away from the window center, clamped to zero
    inside the padding-contaminated ``margin``.  Lattice-edge windows
    keep full weight toward the open edge (their contaminated cells are
    flagged as border instead).
    """
    c = np.arange(size, dtype=np.float64) + 0.5
    half = size / 2.0 - margin
    up = (c - margin) / half
    down = (size - margin - c) / half
    if first and last:
        return np.ones(size, dtype=np.float64)
    if first:
        w = np.minimum(1.0, down)
    elif last:
        w = np.minimum(up, 1.0)
    else:
        w = np.minimum(up, down)
    return np.clip(w, 0.0, 1.0)


@dataclass(frozen=True)
class LatentLattice:
    """K x L grid of latent codes, one per layout tile."""

    codes: tuple  # tuple of tuples of LatentCode, shape (K, L)

    def __post_init__(self):
        k = len(self.codes)
        l = len(self.codes[0]) if k else 0
        if k < 2 or l < 2:
            raise ConfigurationError("lattice needs at least 2x2 codes")
        if any(len(row) != l for row in self.codes):
            raise ConfigurationError("ragged lattice")
        dims = {c.dim for row in self.codes for c in row}
        if len(dims) != 1:
            raise ConfigurationError(f"mixed latent dims {dims}")

    @property
    def shape(self):
        return (len(self.codes), len(self.codes[0]))

    def window_codes(self, i: int, j: int):
        return (self.codes[i][j], self.codes[i][j + 1],
                self.codes[i + 1][j], self.codes[i + 1][j + 1])

    @classmethod
    def from_codes(cls, codes) -> "LatentLattice":
        return cls(codes=tuple(tuple(row) for row in codes))


def lattice_code(world_seed: int, i: int, j: int, dim: int = 128) -> LatentCode:
    """Latent code at lattice position (i, j), hashed from the world seed.

    Position-keyed so any materialization order yields the same world.
    """
    values = normal((dim,), "lattice", world_seed, i, j)
    sub_seed = int(keyed_rng("lattice-seed", world_seed, i, j).integers(2**63))
    return LatentCode(values=values, seed=sub_seed)


def extend_layout(lattice: LatentLattice, stack: GeneratorStack) -> LayoutGrid:
    """Stitch all 2x2 windows of the lattice into one extended grid.

    A K x L lattice yields a (K*R) x (L*R) grid (R the per-code tile
    size); the degenerate 2x2 lattice reproduces its single window
    exactly.
    """
    kk, ll = lattice.shape
    tile = stack.output_resolution
    size = 2 * tile
    margin = stack.receptive_radius + 1
    out_h, out_w = kk * tile, ll * tile
    acc = np.zeros((out_h, out_w, stack.output_channels), dtype=np.float64)
    wsum = np.zeros((out_h, out_w, 1), dtype=np.float64)
    for i in range(kk - 1):
        wy = stitch_profile(size, margin, first=(i == 0), last=(i == kk - 2))
        for j in range(ll - 1):
            wx = stitch_profile(size, margin, first=(j == 0), last=(j == ll - 2))
            w2d = (wy[:, None] * wx[None, :])[:, :, None]
            sub = synthesize_subgrid(lattice.window_codes(i, j), stack)
            acc[i * tile:i * tile + size, j * tile:j * tile + size] += w2d * sub
            wsum[i * tile:i * tile + size, j * tile:j * tile + size] += w2d
    features = (acc / wsum).astype(np.float32)
    return LayoutGrid(features=features, provenance="extended",
                      border_cells=margin)


def window_weight_2d(size: int, margin: int) -> np.ndarray:
    """Interior-window 2D stitch weight (infinite-lattice convention)."""
    w = stitch_profile(size, margin)
    return w[:, None] * w[None, :]


def assemble_chunk(windows, size: int, margin: int, tile: int) -> np.ndarray:
    """Blend one tile-sized chunk from its four covering windows.

    ``windows`` maps relative window offset (di, dj) in {-1, 0}^2 to the
    window's feature block; the chunk occupies the window-local region
    [-di*tile, -di*tile + tile) x [-dj*tile, -dj*tile + tile).
    """
    w1d = stitch_profile(size, margin)
    acc = None
    wsum = np.zeros((tile, tile, 1), dtype=np.float64)
    for (di, dj), block in windows.items():
        r0 = -di * tile
        c0 = -dj * tile
        w2d = (w1d[r0:r0 + tile, None] * w1d[None, c0:c0 + tile])[:, :, None]
        part = w2d * block[r0:r0 + tile, c0:c0 + tile]
        acc = part if acc is None else acc + part
        wsum += w2d
    return (acc / wsum).astype(np.float32)
