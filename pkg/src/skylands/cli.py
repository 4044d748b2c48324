"""Command-line driver: render trajectories, compute metrics, serve.

Exit codes: 0 success, 2 invalid arguments or configuration, 3 file
I/O or format errors, 4 unexpected internal errors.  Log verbosity
comes from the SKYLANDS_LOG environment variable (DEBUG, INFO, ...).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .config import ConfigurationError, RenderConfig
from .metrics import (buffers_render_fn, cycle_consistency, frame_transparency,
                      one_step_consistency)
from .pipeline import LAYERS, FramePipeline
from .refine import make_refiner
from .render import Camera
from .trajectory import (DEFAULT_STEP_LEN, cyclic_trajectory,
                         forward_trajectory, load_trajectory,
                         orbit_trajectory)
from .world import NeuralWorld
from .worldio import (WorldFormatError, load_refiner_weights, load_world,
                      save_float_buffer, save_png, save_world)

log = logging.getLogger("skylands")

FLOAT_LAYERS = {"disparity", "mask", "noise"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="skylands",
        description="Persistent unbounded 3D landscape renderer.")
    p.add_argument("--seed", type=int, default=0,
                   help="world seed for a fresh world")
    p.add_argument("--world", help="world file; loaded if present, "
                   "otherwise created from --seed and saved on exit")
    p.add_argument("--traj", default="forward",
                   help="forward | cyclic | orbit | file=PATH")
    p.add_argument("--steps", type=int, default=100,
                   help="trajectory step count")
    p.add_argument("--step-len", type=float, default=DEFAULT_STEP_LEN,
                   help="camera translation per step")
    p.add_argument("--res", type=int, default=256,
                   help="output resolution (square)")
    p.add_argument("--supersample", type=int, default=1,
                   help="ray supersampling factor (1 = off)")
    p.add_argument("--backend", default="identity",
                   help="refiner: identity | conv | file=PATH")
    p.add_argument("--layers", default="full",
                   help=f"comma-separated subset of {','.join(LAYERS)}")
    p.add_argument("--metrics", choices=["onestep", "cycle", "transparency"],
                   help="emit a per-pose metrics record instead of frames only")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--serve", metavar="ADDR",
                   help="serve frames over HTTP at host:port")
    return p


def make_world(args) -> NeuralWorld:
    if args.world and os.path.exists(args.world):
        log.info("loading world from %s", args.world)
        return load_world(args.world)
    config = RenderConfig()
    if args.res % config.upsample_factor:
        raise ConfigurationError(
            f"--res must be a multiple of {config.upsample_factor}")
    config = dataclasses.replace(
        config, lr_resolution=args.res // config.upsample_factor)
    return NeuralWorld(args.seed, config=config)


def make_backend(args, config: RenderConfig):
    if args.backend.startswith("file="):
        return load_refiner_weights(args.backend[5:])
    return make_refiner(args.backend, factor=config.upsample_factor,
                        seed=args.seed)


def make_trajectory(args, config: RenderConfig):
    start = Camera.from_yaw_pitch((0.0, 1.5, 0.0), 0.0, 0.0,
                                  fov_deg=config.fov_deg,
                                  width=args.res, height=args.res)
    if args.traj.startswith("file="):
        return load_trajectory(args.traj[5:])
    if args.traj == "forward":
        return forward_trajectory(start, args.steps, args.step_len)
    radius = max(args.steps * args.step_len / (2 * np.pi), 1e-3)
    maker = cyclic_trajectory if args.traj == "cyclic" else orbit_trajectory
    if args.traj in ("cyclic", "orbit"):
        return maker((0.0, 0.0), radius, args.steps, height=1.5,
                     fov_deg=config.fov_deg, width=args.res,
                     height_px=args.res)
    raise ConfigurationError(f"unknown trajectory {args.traj!r}")


def compute_metric(kind: str, world, cams, args):
    fn = buffers_render_fn(world, world.config)
    records = []
    for i, cam in enumerate(cams):
        if kind == "cycle":
            val = cycle_consistency(fn, cam, steps=args.steps,
                                    step_len=args.step_len)
        elif kind == "onestep":
            nxt = cams[min(i + 1, len(cams) - 1)]
            val = one_step_consistency(fn, cam, nxt)
        else:
            val = frame_transparency(world, cam, world.config)
        records.append({"pose": i, "metric": kind, "value": val})
        print(f"pose {i:4d}  {kind} = {val:.2f}")
    return records


def run(args) -> int:
    world = make_world(args)
    config = world.config

    if args.serve:
        from .service import serve
        refiner = make_backend(args, config)
        serve(world, args.serve, config=config, refiner=refiner)
        return 0

    layers = [s for s in args.layers.split(",") if s]
    for name in layers:
        if name not in LAYERS:
            raise ConfigurationError(
                f"unknown layer {name!r}; choose from {LAYERS}")
    traj = make_trajectory(args, config)
    os.makedirs(args.out, exist_ok=True)

    records = None
    if args.metrics:
        records = compute_metric(args.metrics, world, traj.cameras, args)
        with open(os.path.join(args.out, "metrics.json"), "w") as fh:
            json.dump(records, fh, indent=2)
    else:
        refiner = make_backend(args, config)
        pipeline = FramePipeline(world, refiner=refiner, config=config,
                                 supersample=args.supersample > 1)
        for i, cam in enumerate(traj.cameras):
            fr = pipeline.render(cam)
            for name in layers:
                stem = os.path.join(args.out, f"frame_{i:04d}_{name}")
                arr = fr.layer(name)
                if name in FLOAT_LAYERS:
                    save_float_buffer(arr, stem + ".fbuf")
                else:
                    save_png(arr, stem + ".png")
            log.info("wrote frame %d/%d", i + 1, len(traj.cameras))

    if args.world and not os.path.exists(args.world):
        save_world(world, args.world)
        log.info("saved world to %s", args.world)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("SKYLANDS_LOG", "WARNING").upper(),
                      logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except (OSError, WorldFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 4
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
