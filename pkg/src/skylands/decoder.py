"""Lifting decoder: (layout feature, height) -> (color feature, density).

An eight-layer style-modulated MLP (hidden width 256) whose only
coordinate input is the height y; the interpolated layout feature
modulates every layer.  No positional encoding, no view direction.  The
density head goes through softplus so sigma is always nonnegative.  An
analytic heightfield oracle with closed-form ray intersections provides
ground truth for rendering tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ConfigurationError
from .grid import leaky_relu
from .rng import fan_in_init, keyed_rng


def softplus(x: np.ndarray) -> np.ndarray:
    # overflow-safe: softplus(x) = max(x, 0) + log1p(exp(-|x|))
    return np.maximum(x, 0) + np.log1p(np.exp(-np.abs(x)))


try:
    from numba import njit

    @njit(cache=True, fastmath=True)
    def _bias_leaky_mod(h, b, s, out):
        # out = leaky(h + b) * s, one memory pass
        m, n = h.shape
        for i in range(m):
            for j in range(n):
                v = h[i, j] + b[j]
                if v < 0.0:
                    v *= np.float32(0.2)
                out[i, j] = v * s[i, j]

    @njit(cache=True, fastmath=True)
    def _bias_leaky(h, b, out):
        m, n = h.shape
        for i in range(m):
            for j in range(n):
                v = h[i, j] + b[j]
                if v < 0.0:
                    v *= np.float32(0.2)
                out[i, j] = v

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    HAVE_NUMBA = False

    def _bias_leaky_mod(h, b, s, out):
        np.add(h, b, out=out)
        np.maximum(out, np.float32(0.2) * out, out=out)
        out *= s

    def _bias_leaky(h, b, out):
        np.add(h, b, out=out)
        np.maximum(out, np.float32(0.2) * out, out=out)


class DecoderWeights:
    """Seeded (or loaded) parameters of the lifting MLP.

    Each hidden layer carries a dense weight, bias, and a style affine
    that maps the layout feature to per-input-channel scales.  Heads:
    color (hidden -> color_dim, linear) and density (hidden -> 1,
    softplus, with a negative bias so untrained terrain is not opaque
    everywhere).
    """

    def __init__(self, feature_dim: int = 32, hidden: int = 256,
                 n_layers: int = 8, color_dim: int = 128,
                 weight_seed: int = 0, density_bias: float = -1.0,
                 height_falloff: float = 3.0, sky_height: float = 1.0,
                 params: dict | None = None):
        self.feature_dim = feature_dim
        self.hidden = hidden
        self.n_layers = n_layers
        self.color_dim = color_dim
        self.weight_seed = weight_seed
        self.density_bias = density_bias
        # density decays with altitude above sky_height so untrained
        # worlds still have open sky instead of uniform fog
        self.height_falloff = height_falloff
        self.sky_height = sky_height
        self.params = params if params is not None else self._seed_params()
        self._check()

    def _seed_params(self) -> dict:
        p = {}
        d_in = 1  # y coordinate replaces the constant input
        for i in range(self.n_layers):
            p[f"w{i}"] = fan_in_init((d_in, self.hidden), d_in,
                                     "dec_w", self.weight_seed, i)
            p[f"b{i}"] = np.zeros(self.hidden, dtype=np.float32)
            p[f"aw{i}"] = fan_in_init((self.feature_dim, d_in), self.feature_dim,
                                      "dec_aw", self.weight_seed, i)
            p[f"ab{i}"] = np.ones(d_in, dtype=np.float32)
            d_in = self.hidden
        p["color_w"] = fan_in_init((self.hidden, self.color_dim), self.hidden,
                                   "dec_color", self.weight_seed)
        p["color_b"] = np.zeros(self.color_dim, dtype=np.float32)
        p["sigma_w"] = fan_in_init((self.hidden, 1), self.hidden,
                                   "dec_sigma", self.weight_seed)
        p["sigma_b"] = np.full(1, self.density_bias, dtype=np.float32)
        return p

    def _check(self):
        if self.params["aw0"].shape[0] != self.feature_dim:
            raise ConfigurationError("style affine does not match feature_dim")
        for v in self.params.values():
            if not np.all(np.isfinite(v)):
                raise ConfigurationError("non-finite decoder weight")


@dataclass(frozen=True)
class DecodedSample:
    color_feature: np.ndarray  # (color_dim,)
    density: float


def decode_batch(features: np.ndarray, y: np.ndarray,
                 weights: DecoderWeights):
    """Vectorized decode of (M, feature_dim) features at heights y (M,).

    Returns (color_features (M, color_dim), sigma (M,)).
    """
    if features.shape[-1] != weights.feature_dim:
        raise ConfigurationError(
            f"feature dim {features.shape[-1]} != {weights.feature_dim}")
    p = weights.params
    feats = np.ascontiguousarray(features, dtype=np.float32)
    y32 = np.asarray(y, dtype=np.float32)
    m = len(y32)
    hid = weights.hidden
    # layer 0: the 1-dim y input, modulated and lifted to the hidden width
    x0 = y32.reshape(-1, 1) * (feats @ p["aw0"] + p["ab0"])
    h = np.empty((m, hid), dtype=np.float32)
    np.matmul(x0, p["w0"], out=h)
    # reusable buffers; bias + leaky + next-layer modulation fuse into a
    # single memory pass so the GEMMs dominate
    s = np.empty((m, hid), dtype=np.float32)
    x = np.empty((m, hid), dtype=np.float32)
    for i in range(1, weights.n_layers):
        np.matmul(feats, p[f"aw{i}"], out=s)
        s += p[f"ab{i}"]
        _bias_leaky_mod(h, p[f"b{i - 1}"], s, x)
        np.matmul(x, p[f"w{i}"], out=h)
    _bias_leaky(h, p[f"b{weights.n_layers - 1}"], x)
    color = x @ p["color_w"] + p["color_b"]
    pre = (x @ p["sigma_w"] + p["sigma_b"])[:, 0]
    if weights.height_falloff:
        pre = pre - weights.height_falloff * np.maximum(
            y32 - np.float32(weights.sky_height), 0.0)
    sigma = softplus(pre)
    return color, sigma


def decode_point(feature: np.ndarray, y: float,
                 weights: DecoderWeights) -> DecodedSample:
    color, sigma = decode_batch(feature[None, :], np.array([y]), weights)
    return DecodedSample(color_feature=color[0], density=float(sigma[0]))


@dataclass(frozen=True)
class HeightfieldOracle:
    """Analytic terrain: solid density below h(x, z), empty above.

    h is a sum of seeded sinusoids (zero waves = flat plane at
    ``base_height``).  The color feature is a flat vector, optionally
    perturbed by smooth sinusoids in (x, z) for warp tests that need
    texture.
    """

    base_height: float = 0.0
    amplitudes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    freq_x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    freq_z: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phases: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma_solid: float = 50.0
    color_dim: int = 128
    color_seed: int = 0
    texture_amplitude: float = 0.0
    texture_scale: float = 2.0

    @classmethod
    def from_seed(cls, seed: int, n_waves: int = 4, amplitude: float = 0.3,
                  wavelength: float = 6.0, **kw) -> "HeightfieldOracle":
        rng = keyed_rng("oracle", seed)
        return cls(
            amplitudes=amplitude * rng.uniform(0.3, 1.0, n_waves),
            freq_x=rng.uniform(-1, 1, n_waves) * 2 * np.pi / wavelength,
            freq_z=rng.uniform(-1, 1, n_waves) * 2 * np.pi / wavelength,
            phases=rng.uniform(0, 2 * np.pi, n_waves),
            color_seed=seed,
            **kw,
        )

    def height(self, x, z):
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        h = np.full(np.broadcast(x, z).shape, self.base_height)
        for a, fx, fz, ph in zip(self.amplitudes, self.freq_x,
                                 self.freq_z, self.phases):
            h = h + a * np.sin(fx * x + fz * z + ph)
        return h

    def base_color_feature(self) -> np.ndarray:
        rng = keyed_rng("oracle-color", self.color_seed)
        return rng.uniform(-1, 1, self.color_dim).astype(np.float32)

    def decode_points(self, positions: np.ndarray):
        """(M, 3) world positions -> (color features, sigma)."""
        x, y, z = positions[:, 0], positions[:, 1], positions[:, 2]
        inside = y < self.height(x, z)
        sigma = np.where(inside, self.sigma_solid, 0.0).astype(np.float32)
        color = np.broadcast_to(self.base_color_feature(),
                                (len(positions), self.color_dim)).copy()
        if self.texture_amplitude:
            k = 2 * np.pi / self.texture_scale
            tex = np.stack([np.sin(k * x), np.sin(k * z),
                            np.sin(k * (x + z) / np.sqrt(2))], axis=1)
            color[:, :3] += self.texture_amplitude * tex.astype(np.float32)
        return color, sigma


def oracle_decode(x: float, y: float, z: float,
                  oracle: HeightfieldOracle) -> DecodedSample:
    color, sigma = oracle.decode_points(np.array([[x, y, z]], dtype=np.float64))
    return DecodedSample(color_feature=color[0], density=float(sigma[0]))
