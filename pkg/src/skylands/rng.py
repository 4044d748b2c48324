"""Counter-based deterministic random numbers.

Every random tensor in the engine (latent codes, network weights, noise
grids) is drawn from a Philox stream keyed by a hash of a structured key
tuple, e.g. ``("latent", world_seed, i, j)``.  This makes all values pure
functions of their key: generation order does not matter, regions can be
materialized lazily and in parallel, and results are bit-reproducible
across platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_bytes(parts: tuple) -> bytes:
    out = []
    for p in parts:
        if isinstance(p, str):
            out.append(b"s" + p.encode("utf-8"))
        elif isinstance(p, (int, np.integer)):
            out.append(b"i" + int(p).to_bytes(16, "little", signed=True))
        else:
            raise TypeError(f"unsupported key part {p!r}")
        out.append(b"\x00")
    return b"".join(out)


def keyed_rng(*parts) -> np.random.Generator:
    """Generator seeded purely by the key tuple (strings and ints)."""
    digest = hashlib.blake2b(_key_bytes(parts), digest_size=16).digest()
    key = int.from_bytes(digest, "little")
    return np.random.Generator(np.random.Philox(key=key))


def normal(shape, *parts) -> np.ndarray:
    """Standard-normal float32 tensor, a pure function of the key."""
    return keyed_rng(*parts).standard_normal(shape, dtype=np.float32)


def fan_in_init(shape, fan_in: int, *parts) -> np.ndarray:
    """Unit-variance Gaussian scaled by 1/sqrt(fan_in)."""
    w = keyed_rng(*parts).standard_normal(shape, dtype=np.float32)
    return w / np.float32(np.sqrt(fan_in))
