"""Binary persistence: world files, refiner weight files, float buffers.

World and weight files share a sectioned container: a 4-byte magic, a
little-endian u16 format version, a length-prefixed JSON manifest, and
raw little-endian array sections whose shapes, dtypes, and sha256
digests live in the manifest.  Every section is digest-checked on load.
Float buffers use a minimal ``FBUF`` header (u32 width, height,
channels) followed by row-major little-endian float32 data.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np
from PIL import Image

from .config import RenderConfig

WORLD_MAGIC = b"SKYW"
WEIGHTS_MAGIC = b"SKWT"
FBUF_MAGIC = b"FBUF"
FORMAT_VERSION = 1


class WorldFormatError(ValueError):
    """File is not a recognized container."""


class WorldVersionError(WorldFormatError):
    """Container version is newer than this reader supports."""


class WorldDigestError(WorldFormatError):
    """A section's sha256 digest does not match its payload."""


class WorldTruncatedError(WorldFormatError):
    """File ends before the manifest-declared payload."""


# --- generic sectioned container ---------------------------------------------

def write_container(path: str, magic: bytes, manifest: dict,
                    sections: dict):
    """Write manifest plus named float/int arrays with per-section digests."""
    entries = []
    blobs = []
    for name, arr in sections.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(arr.shape),
                        "dtype": arr.dtype.str, "nbytes": len(raw),
                        "sha256": hashlib.sha256(raw).hexdigest()})
        blobs.append(raw)
    manifest = dict(manifest, sections=entries)
    mjson = json.dumps(manifest, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(mjson)))
        fh.write(mjson)
        for raw in blobs:
            fh.write(raw)


def read_container(path: str, magic: bytes):
    """Read back (manifest, {name: array}); raises on any corruption."""
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head != magic:
            raise WorldFormatError(
                f"bad magic {head!r}, expected {magic.decode()}")
        ver_raw = fh.read(2)
        if len(ver_raw) < 2:
            raise WorldTruncatedError("file ends inside the header")
        (version,) = struct.unpack("<H", ver_raw)
        if version > FORMAT_VERSION:
            raise WorldVersionError(
                f"file version {version} > supported {FORMAT_VERSION}")
        len_raw = fh.read(4)
        if len(len_raw) < 4:
            raise WorldTruncatedError("file ends inside the header")
        (mlen,) = struct.unpack("<I", len_raw)
        mjson = fh.read(mlen)
        if len(mjson) < mlen:
            raise WorldTruncatedError("file ends inside the manifest")
        try:
            manifest = json.loads(mjson)
        except json.JSONDecodeError as exc:
            raise WorldFormatError(f"manifest is not valid JSON: {exc}")
        sections = {}
        for entry in manifest.get("sections", []):
            raw = fh.read(entry["nbytes"])
            if len(raw) < entry["nbytes"]:
                raise WorldTruncatedError(
                    f"section {entry['name']!r} is truncated")
            digest = hashlib.sha256(raw).hexdigest()
            if digest != entry["sha256"]:
                raise WorldDigestError(
                    f"section {entry['name']!r} digest mismatch")
            sections[entry["name"]] = np.frombuffer(
                raw, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"])
    return manifest, sections


# --- world files --------------------------------------------------------------

def _stack_spec(stack) -> dict:
    return {
        "latent_dim": stack.latent_dim,
        "style_dim": stack.style_dim,
        "mapping_layers": stack.mapping_layers,
        "const_res": stack.const_res,
        "const_ch": stack.const_ch,
        "output_channels": stack.output_channels,
        "weight_seed": stack.weight_seed,
        "layers": [[s.upsample, s.in_ch, s.out_ch, s.kernel]
                   for s in stack.layers],
    }


def _decoder_spec(dec) -> dict:
    return {
        "feature_dim": dec.feature_dim,
        "hidden": dec.hidden,
        "n_layers": dec.n_layers,
        "color_dim": dec.color_dim,
        "weight_seed": dec.weight_seed,
        "density_bias": dec.density_bias,
        "height_falloff": dec.height_falloff,
        "sky_height": dec.sky_height,
    }


def save_world(world, path: str):
    """Persist seeds, component specs, weights, and materialized chunks."""
    chunks = sorted(world.layout.materialized)
    manifest = {
        "kind": "world",
        "world_seed": world.world_seed,
        "noise_seed": world.noise_seed,
        "config": world.config.to_dict(),
        "stack": _stack_spec(world.stack),
        "decoder": _decoder_spec(world.decoder),
        "chunks": [list(c) for c in chunks],
    }
    sections = {f"layout:{a}:{b}": world.layout.chunk(a, b)
                for a, b in chunks}
    sections["projection:matrix"] = world.projection.matrix
    sections["projection:offset"] = world.projection.offset
    for name, arr in world.decoder.params.items():
        sections[f"decoder:{name}"] = arr
    write_container(path, WORLD_MAGIC, manifest, sections)


def load_world(path: str, verify_regen: bool = False):
    """Rebuild a world from file; chunk payloads seed the layout cache.

    With ``verify_regen`` each stored chunk is recomputed from the world
    seed and compared byte-for-byte.
    """
    from .decoder import DecoderWeights
    from .grid import GeneratorStack, LayerSpec
    from .world import NeuralWorld, ProjectionP

    manifest, sections = read_container(path, WORLD_MAGIC)
    if manifest.get("kind") != "world":
        raise WorldFormatError(f"not a world file: kind={manifest.get('kind')!r}")
    config = RenderConfig.from_dict(manifest["config"])
    sspec = dict(manifest["stack"])
    sspec["layers"] = tuple(LayerSpec(*row) for row in sspec["layers"])
    stack = GeneratorStack(**sspec)
    dec_params = {name[len("decoder:"):]: np.ascontiguousarray(arr)
                  for name, arr in sections.items()
                  if name.startswith("decoder:")}
    decoder = DecoderWeights(**manifest["decoder"], params=dec_params)
    projection = ProjectionP(
        matrix=np.ascontiguousarray(sections["projection:matrix"]),
        offset=np.ascontiguousarray(sections["projection:offset"]))
    world = NeuralWorld(int(manifest["world_seed"]), config=config,
                        stack=stack, decoder=decoder, projection=projection,
                        noise_seed=int(manifest["noise_seed"]))
    for a, b in (tuple(c) for c in manifest["chunks"]):
        stored = np.ascontiguousarray(sections[f"layout:{a}:{b}"])
        if verify_regen:
            fresh = world.layout.chunk_values(a, b)
            if not np.array_equal(fresh, stored):
                raise WorldDigestError(
                    f"chunk ({a}, {b}) does not match its regeneration")
        world.layout._chunks[(a, b)] = stored
    return world


# --- refiner weight files ------------------------------------------------------

def save_refiner_weights(refiner, path: str):
    manifest = {
        "kind": "refiner",
        "name": refiner.name,
        "seed": refiner.seed,
        "factor": refiner.factor,
        "phi_channels": refiner.phi_channels,
        "hidden": refiner.hidden,
        "noise_scales": refiner.noise_scales,
    }
    write_container(path, WEIGHTS_MAGIC, manifest, refiner.params)


def load_refiner_weights(path: str):
    from .refine import ConvRefiner

    manifest, sections = read_container(path, WEIGHTS_MAGIC)
    if manifest.get("kind") != "refiner":
        raise WorldFormatError(
            f"not a refiner weight file: kind={manifest.get('kind')!r}")
    ref = ConvRefiner(seed=int(manifest["seed"]),
                      factor=int(manifest["factor"]),
                      phi_channels=int(manifest["phi_channels"]),
                      hidden=int(manifest["hidden"]))
    for name in ref.params:
        if name not in sections:
            raise WorldFormatError(f"weight file missing section {name!r}")
        ref.params[name] = sections[name].astype(np.float32)
    ref.noise_scales = [float(s) for s in manifest["noise_scales"]]
    return ref


# --- float image buffers --------------------------------------------------------

def encode_float_buffer(arr: np.ndarray) -> bytes:
    """Pack a (H, W) or (H, W, C) float array as FBUF bytes."""
    a = np.asarray(arr, dtype="<f4")
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise ValueError("float buffers must be (H, W) or (H, W, C)")
    h, w, c = a.shape
    return FBUF_MAGIC + struct.pack("<III", w, h, c) + \
        np.ascontiguousarray(a).tobytes()


def decode_float_buffer(data: bytes) -> np.ndarray:
    if data[:4] != FBUF_MAGIC:
        raise WorldFormatError("bad float buffer magic")
    if len(data) < 16:
        raise WorldTruncatedError("float buffer header truncated")
    w, h, c = struct.unpack("<III", data[4:16])
    need = 16 + 4 * w * h * c
    if len(data) < need:
        raise WorldTruncatedError("float buffer payload truncated")
    arr = np.frombuffer(data[16:need], dtype="<f4").reshape(h, w, c)
    return arr[:, :, 0] if c == 1 else arr


def save_float_buffer(arr: np.ndarray, path: str):
    with open(path, "wb") as fh:
        fh.write(encode_float_buffer(arr))


def load_float_buffer(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_float_buffer(fh.read())


def save_png(img: np.ndarray, path: str):
    """Write a float image in [0, 1] (or a scalar map) as 8-bit PNG."""
    a = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    u8 = np.round(a * 255.0).astype(np.uint8)
    mode = "L" if u8.ndim == 2 else "RGB"
    Image.fromarray(u8, mode=mode).save(path)


def encode_png(img: np.ndarray) -> bytes:
    import io

    a = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    u8 = np.round(a * 255.0).astype(np.uint8)
    mode = "L" if u8.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(u8, mode=mode).save(buf, format="PNG")
    return buf.getvalue()
