"""HTTP frame server for interactive exploration.

Endpoints: ``GET /world_info`` (render config and materialized extent),
``POST /frame`` (render requested layers for a pose), ``POST /extend``
(materialize a world rectangle).  Responses are idempotent against an
unchanged world; extension only grows the materialized extent and never
changes previously served frames.  Rendering reads the chunk cache,
which is append-only; materialization is serialized behind one lock.
"""

from __future__ import annotations

import base64
import threading
import time

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import RenderConfig
from .pipeline import LAYERS, FramePipeline, upsampled_lr_rgb
from .render import Camera
from .world import NeuralWorld
from .worldio import FORMAT_VERSION, encode_float_buffer, encode_png


class PoseModel(BaseModel):
    position: list[float] = Field(min_length=3, max_length=3)
    yaw: float = 0.0
    pitch: float = 0.0

    def camera(self, width: int, height: int, fov_deg: float) -> Camera:
        if not all(np.isfinite(self.position)) or \
                not np.isfinite([self.yaw, self.pitch]).all():
            raise HTTPException(422, detail="pose must be finite")
        return Camera.from_yaw_pitch(self.position, self.yaw, self.pitch,
                                     fov_deg=fov_deg, width=width,
                                     height=height)


class FrameRequest(BaseModel):
    pose: PoseModel
    resolution: int | None = None
    layers: list[str] = ["full"]
    supersample: bool = False


class Payload(BaseModel):
    encoding: str   # "png" or "fbuf"
    data: str       # base64


class FrameResponse(BaseModel):
    frame_id: str
    payloads: dict[str, Payload]
    timing_ms: float
    extent: dict


class ExtendRequest(BaseModel):
    x0: float
    z0: float
    x1: float
    z1: float


PNG_LAYERS = {"full", "rgb_lr", "dome"}


def encode_layer(name: str, arr: np.ndarray) -> Payload:
    if name in PNG_LAYERS:
        img = np.clip(arr, 0.0, 1.0)
        return Payload(encoding="png",
                       data=base64.b64encode(encode_png(img)).decode())
    return Payload(encoding="fbuf",
                   data=base64.b64encode(encode_float_buffer(arr)).decode())


def create_app(world=None, seed: int = 0, config: RenderConfig | None = None,
               refiner=None, dome=None) -> FastAPI:
    config = config or RenderConfig()
    world = world or NeuralWorld(seed, config=config)
    pipeline = FramePipeline(world, refiner=refiner, dome=dome, config=config)
    lock = threading.Lock()
    app = FastAPI(title="skylands")
    app.state.world = world
    app.state.pipeline = pipeline

    @app.get("/world_info")
    def world_info():
        c = pipeline.config
        return {
            "world_seed": getattr(world, "world_seed", None),
            "format_version": FORMAT_VERSION,
            "near": c.near,
            "far": c.far,
            "samples_per_ray": c.samples_per_ray,
            "fov_deg": c.fov_deg,
            "lr_resolution": c.lr_resolution,
            "upsample_factor": c.upsample_factor,
            "hr_resolution": c.hr_resolution,
            "cell_width": c.cell_width,
            "layout_resolution": c.layout_resolution,
            "disparity_clip": c.disparity_clip,
            "disparity_scale": c.disparity_scale,
            "step_len": 0.192,
            "layers": list(LAYERS),
            "extent": world.extent(),
        }

    @app.post("/frame", response_model=FrameResponse)
    def frame(req: FrameRequest):
        c = pipeline.config
        for name in req.layers:
            if name not in LAYERS:
                raise HTTPException(
                    422, detail=f"unknown layer {name!r}; choose from {LAYERS}")
        if not req.layers:
            raise HTTPException(422, detail="at least one layer required")
        res = c.hr_resolution if req.resolution is None else req.resolution
        if res <= 0 or res % c.upsample_factor:
            raise HTTPException(
                422, detail=f"resolution must be a positive multiple of "
                f"{c.upsample_factor}")
        cam = req.pose.camera(res, res, c.fov_deg)
        t0 = time.perf_counter()
        with lock:
            # serialize so no frame can observe a half-materialized region
            pipeline.supersample = req.supersample
            fr = pipeline.render(cam)
        payloads = {}
        for name in req.layers:
            arr = upsampled_lr_rgb(fr) if name == "rgb_lr" else fr.layer(name)
            payloads[name] = encode_layer(name, arr)
        frame_id = (f"{req.pose.position}:{req.pose.yaw}:{req.pose.pitch}:"
                    f"{res}:{req.supersample}")
        return FrameResponse(frame_id=frame_id, payloads=payloads,
                             timing_ms=(time.perf_counter() - t0) * 1e3,
                             extent=world.extent())

    @app.post("/extend")
    def extend(req: ExtendRequest):
        if req.x1 < req.x0 or req.z1 < req.z0:
            raise HTTPException(422, detail="empty extension rectangle")
        with lock:
            extent = world.ensure_region(req.x0, req.z0, req.x1, req.z1)
        return {"extent": extent}

    return app


def serve(world, address: str, config: RenderConfig | None = None,
          refiner=None, dome=None):
    """Blocking server; address is host:port."""
    import uvicorn

    host, _, port = address.rpartition(":")
    app = create_app(world=world, config=config, refiner=refiner, dome=dome)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
