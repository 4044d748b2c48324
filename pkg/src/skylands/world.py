"""World backends: the neural layout world and the analytic oracle world.

Both expose the same decoding surface to the renderer: batched
``decode_points`` (color feature + density at 3D positions), a
persistent ground-plane noise field, and an RGB projection.  The neural
world materializes layout features lazily in tile-sized chunks; chunk
contents are pure functions of (world seed, position), so any
materialization order produces the same world and extending it never
changes existing chunks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import OutOfBoundsError, OutOfExtentPolicy, RenderConfig
from .decoder import DecoderWeights, HeightfieldOracle, decode_batch
from .extension import assemble_chunk, lattice_code
from .grid import GeneratorStack, bilinear_cells, mapping_forward, run_layer
from .rng import fan_in_init, keyed_rng, normal


@dataclass(frozen=True)
class ProjectionP:
    """Affine 128 -> 3 map turning feature images into RGB."""

    matrix: np.ndarray  # (C, 3)
    offset: np.ndarray  # (3,)

    @classmethod
    def from_seed(cls, seed: int, channels: int = 128) -> "ProjectionP":
        m = fan_in_init((channels, 3), channels, "projection", seed)
        off = keyed_rng("projection-offset", seed).uniform(0.25, 0.75, 3)
        return cls(matrix=m, offset=off.astype(np.float32))


class ChunkedPlane:
    """Lazily materialized infinite 2D field, cached per tile chunk."""

    def __init__(self, tile: int, cell_width: float):
        self.tile = tile
        self.cell_width = cell_width
        self._chunks: dict = {}

    def chunk_values(self, a: int, b: int) -> np.ndarray:
        raise NotImplementedError

    def chunk(self, a: int, b: int) -> np.ndarray:
        key = (a, b)
        if key not in self._chunks:
            self._chunks[key] = self.chunk_values(a, b)
        return self._chunks[key]

    @property
    def materialized(self):
        return frozenset(self._chunks)

    def world_to_cell(self, x, z):
        """Continuous (row, col) global cell coords; centers at integers."""
        col = np.asarray(x, dtype=np.float64) / self.cell_width - 0.5
        row = np.asarray(z, dtype=np.float64) / self.cell_width - 0.5
        return row, col

    def mosaic(self, r0: int, r1: int, c0: int, c1: int) -> np.ndarray:
        """Dense cell array for global rows [r0, r1] x cols [c0, c1]."""
        t = self.tile
        sample = self.chunk(r0 // t, c0 // t)
        shape = (r1 - r0 + 1, c1 - c0 + 1) + sample.shape[2:]
        out = np.empty(shape, dtype=sample.dtype)
        for a in range(r0 // t, r1 // t + 1):
            for b in range(c0 // t, c1 // t + 1):
                block = self.chunk(a, b)
                rr0, rr1 = max(r0, a * t), min(r1, a * t + t - 1)
                cc0, cc1 = max(c0, b * t), min(c1, b * t + t - 1)
                out[rr0 - r0:rr1 - r0 + 1, cc0 - c0:cc1 - c0 + 1] = \
                    block[rr0 - a * t:rr1 - a * t + 1, cc0 - b * t:cc1 - b * t + 1]
        return out

    def sample_bilinear(self, x, z) -> np.ndarray:
        """Bilinear field values at world (x, z), materializing as needed."""
        row, col = self.world_to_cell(x, z)
        r0 = int(np.floor(row.min()))
        c0 = int(np.floor(col.min()))
        r1 = int(np.floor(row.max())) + 1
        c1 = int(np.floor(col.max())) + 1
        cells = self.mosaic(r0, r1, c0, c1)
        return bilinear_cells(cells, row - r0, col - c0)

    def needed_chunks(self, x, z):
        row, col = self.world_to_cell(x, z)
        t = self.tile
        a0 = int(np.floor(row.min())) // t
        a1 = (int(np.floor(row.max())) + 1) // t
        b0 = int(np.floor(col.min())) // t
        b1 = (int(np.floor(col.max())) + 1) // t
        return {(a, b) for a in range(a0, a1 + 1) for b in range(b0, b1 + 1)}


class NoiseField(ChunkedPlane):
    """Standard-Gaussian noise on the ground plane at layout resolution."""

    def __init__(self, seed: int, tile: int = 256, cell_width: float = 0.15):
        super().__init__(tile, cell_width)
        self.seed = seed

    def chunk_values(self, a: int, b: int) -> np.ndarray:
        return normal((self.tile, self.tile), "noise", self.seed, a, b)


class LayoutField(ChunkedPlane):
    """Infinite stitched layout feature field.

    Chunk (a, b) is blended from the four synthesis windows covering it;
    window (i, j) is synthesized under blended styles from the 2x2 lattice codes at
    positions (i..i+1, j..j+1), all hashed from the world seed.
    """

    def __init__(self, world_seed: int, stack: GeneratorStack,
                 cell_width: float = 0.15):
        super().__init__(stack.output_resolution, cell_width)
        self.world_seed = world_seed
        self.stack = stack
        self._windows: dict = {}

    def window(self, i: int, j: int) -> np.ndarray:
        key = (i, j)
        if key not in self._windows:
            # local import to avoid cycle at module load
            from .extension import synthesize_subgrid
            codes = tuple(lattice_code(self.world_seed, i + di, j + dj,
                                       self.stack.latent_dim)
                          for di, dj in ((0, 0), (0, 1), (1, 0), (1, 1)))
            self._windows[key] = synthesize_subgrid(codes, self.stack)
        return self._windows[key]

    def chunk_values(self, a: int, b: int) -> np.ndarray:
        windows = {(di, dj): self.window(a + di, b + dj)
                   for di in (-1, 0) for dj in (-1, 0)}
        return assemble_chunk(windows, 2 * self.tile,
                              self.stack.receptive_radius + 1, self.tile)


def _extent_descriptor(plane: ChunkedPlane) -> dict:
    chunks = sorted(plane.materialized)
    if not chunks:
        return {"chunks": 0, "cell_rect": None, "world_rect": None}
    a = [c[0] for c in chunks]
    b = [c[1] for c in chunks]
    t = plane.tile
    cw = plane.cell_width
    cell_rect = [min(a) * t, min(b) * t, (max(a) + 1) * t, (max(b) + 1) * t]
    world_rect = [cell_rect[1] * cw, cell_rect[0] * cw,
                  cell_rect[3] * cw, cell_rect[2] * cw]  # x0, z0, x1, z1
    return {"chunks": len(chunks), "cell_rect": cell_rect,
            "world_rect": world_rect,
            "tiles": [list(c) for c in chunks]}


class NeuralWorld:
    """Layout-grid world: hashed latent lattice, lifting decoder, noise."""

    def __init__(self, world_seed: int, config: RenderConfig | None = None,
                 stack: GeneratorStack | None = None,
                 decoder: DecoderWeights | None = None,
                 projection: ProjectionP | None = None,
                 noise_seed: int | None = None):
        self.world_seed = world_seed
        self.config = config or RenderConfig()
        seed_rng = keyed_rng("world", world_seed)
        derive = lambda: int(seed_rng.integers(2**63))
        self.stack = stack or GeneratorStack(weight_seed=derive())
        self.decoder = decoder or DecoderWeights(
            feature_dim=self.stack.output_channels, weight_seed=derive())
        self.projection = projection or ProjectionP.from_seed(derive())
        self.noise_seed = derive() if noise_seed is None else noise_seed
        self.layout = LayoutField(world_seed, self.stack,
                                  cell_width=self.config.cell_width)
        self.noise = NoiseField(self.noise_seed, tile=self.stack.output_resolution,
                                cell_width=self.config.cell_width)

    def ensure_region(self, x0: float, z0: float, x1: float, z1: float):
        """Materialize every chunk whose cells the rectangle touches."""
        xs = np.array([x0, x1])
        zs = np.array([z0, z1])
        for a, b in sorted(self.layout.needed_chunks(xs, zs)):
            self.layout.chunk(a, b)
        return self.extent()

    def extent(self) -> dict:
        return _extent_descriptor(self.layout)

    def _in_extent(self, x, z) -> np.ndarray:
        needed_rows, needed_cols = self.layout.world_to_cell(x, z)
        t = self.layout.tile
        ok = np.ones(needed_rows.shape, dtype=bool)
        mat = self.layout.materialized
        for dr in (0, 1):
            for dc in (0, 1):
                a = (np.floor(needed_rows).astype(np.int64) + dr) // t
                b = (np.floor(needed_cols).astype(np.int64) + dc) // t
                here = np.zeros_like(ok)
                for key in set(zip(a.ravel().tolist(), b.ravel().tolist())):
                    if key in mat:
                        here |= (a == key[0]) & (b == key[1])
                ok &= here
        return ok

    def decode_points(self, positions: np.ndarray,
                      policy: OutOfExtentPolicy = OutOfExtentPolicy.AUTO_EXTEND):
        """(M, 3) positions -> (color features (M, 128), sigma (M,))."""
        x, y, z = positions[:, 0], positions[:, 1], positions[:, 2]
        if policy == OutOfExtentPolicy.AUTO_EXTEND:
            feats = self.layout.sample_bilinear(x, z)
            return decode_batch(feats, y, self.decoder)
        inside = self._in_extent(x, z)
        if policy == OutOfExtentPolicy.STRICT and not inside.all():
            bad = np.argmin(inside)
            raise OutOfBoundsError(
                f"sample {bad} at ({x[bad]:.3f}, {z[bad]:.3f}) outside "
                "materialized extent (strict mode)")
        color = np.zeros((len(positions), self.decoder.color_dim),
                         dtype=np.float32)
        sigma = np.zeros(len(positions), dtype=np.float32)
        if inside.any():
            feats = self.layout.sample_bilinear(x[inside], z[inside])
            c, s = decode_batch(feats, y[inside], self.decoder)
            color[inside] = c
            sigma[inside] = s
        return color, sigma

    def noise_at(self, x, z) -> np.ndarray:
        return self.noise.sample_bilinear(x, z)


class OracleWorld:
    """Analytic heightfield world with the same decoding surface."""

    def __init__(self, oracle: HeightfieldOracle | None = None,
                 config: RenderConfig | None = None, noise_seed: int = 0,
                 projection: ProjectionP | None = None):
        self.oracle = oracle or HeightfieldOracle()
        self.config = config or RenderConfig()
        self.projection = projection or ProjectionP.from_seed(noise_seed + 1)
        self.noise = NoiseField(noise_seed, tile=self.config.layout_resolution,
                                cell_width=self.config.cell_width)

    def ensure_region(self, *args):
        return self.extent()

    def extent(self) -> dict:
        return {"chunks": -1, "cell_rect": None, "world_rect": None,
                "analytic": True}

    def decode_points(self, positions: np.ndarray,
                      policy: OutOfExtentPolicy = OutOfExtentPolicy.AUTO_EXTEND):
        return self.oracle.decode_points(positions)

    def noise_at(self, x, z) -> np.ndarray:
        return self.noise.sample_bilinear(x, z)


def density_at(world, position) -> float:
    """Terrain density at one world-space point via the active backend."""
    pos = np.asarray(position, dtype=np.float64).reshape(1, 3)
    _, sigma = world.decode_points(pos)
    return float(sigma[0])
