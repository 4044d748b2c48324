"""Pose banks and evaluation trajectories.

Training-style pose banks sample positions uniformly over the layout
extent with small height offsets and re-draw the yaw until the near half
of the view frustum (its ground projection out to mid-depth) falls
inside the extent.  Cameras are then drawn from the bank with
probability proportional to inverse terrain density.  Evaluation
trajectories: forward (fixed heading, ground-projected forward steps),
cyclic/orbit (exactly closed circles), and seeded free flight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .config import RenderConfig
from .render import Camera
from .rng import keyed_rng
from .world import density_at

DEFAULT_STEP_LEN = 0.192  # half the 38.4-unit grid in 100 steps


@dataclass(frozen=True)
class PoseBank:
    poses: tuple            # tuple of Camera
    extent: tuple           # ((x0, x1), (z0, z1))
    seed: int
    params: dict

    def __len__(self):
        return len(self.poses)


@dataclass(frozen=True)
class Trajectory:
    cameras: tuple
    kind: str               # forward | cyclic | orbit | free
    step_len: float = 0.0

    def __len__(self):
        return len(self.cameras)


def _extent_of(grid_or_extent):
    if hasattr(grid_or_extent, "world_extent"):
        return grid_or_extent.world_extent
    (x0, x1), (z0, z1) = grid_or_extent
    return ((float(x0), float(x1)), (float(z0), float(z1)))


def frustum_ground_footprint(camera: Camera, near: float, mid: float) -> np.ndarray:
    """(x, z) of the camera plus frustum corner rays at near and mid depth."""
    tan_v = np.tan(np.deg2rad(camera.fov_deg) / 2)
    tan_h = tan_v * camera.width / camera.height
    corners = np.array([[sx * tan_h, sy * tan_v, 1.0]
                        for sx in (-1, 1) for sy in (-1, 1)])
    dirs = corners @ camera.rotation.T
    pts = [camera.position[None, [0, 2]]]
    for t in (near, mid):
        p = camera.position[None, :] + t * dirs
        pts.append(p[:, [0, 2]])
    return np.concatenate(pts, axis=0)


def near_frustum_inside(camera: Camera, extent, near: float, mid: float) -> bool:
    (x0, x1), (z0, z1) = extent
    fp = frustum_ground_footprint(camera, near, mid)
    return bool(np.all((fp[:, 0] >= x0) & (fp[:, 0] <= x1) &
                       (fp[:, 1] >= z0) & (fp[:, 1] <= z1)))


def build_pose_bank(grid_or_extent, n: int = 1000, seed: int = 0,
                    config: RenderConfig | None = None,
                    base_height: float = 1.0, height_range: float = 0.5,
                    width: int = 32, height: int = 32,
                    max_tries: int = 1000) -> PoseBank:
    """Sample ``n`` poses uniformly over the extent, yaw-rejected so the
    near-half frustum footprint stays inside it."""
    config = config or RenderConfig()
    extent = _extent_of(grid_or_extent)
    (x0, x1), (z0, z1) = extent
    mid = (config.near + config.far) / 2
    span = min(x1 - x0, z1 - z0)
    if span <= 2 * mid * 0.1:
        raise ValueError("extent too small for the near-frustum rule")
    rng = keyed_rng("pose-bank", seed)
    poses = []
    for i in range(n):
        ok = None
        for _ in range(max_tries):
            pos = np.array([rng.uniform(x0, x1),
                            base_height + rng.uniform(0.0, height_range),
                            rng.uniform(z0, z1)])
            yaw = rng.uniform(0, 2 * np.pi)
            cam = Camera.from_yaw_pitch(pos, yaw, 0.0,
                                        fov_deg=config.fov_deg,
                                        width=width, height=height)
            if near_frustum_inside(cam, extent, config.near, mid):
                ok = cam
                break
        if ok is None:
            raise RuntimeError(
                f"pose {i}: no admissible yaw/position in {max_tries} tries")
        poses.append(ok)
    return PoseBank(poses=tuple(poses), extent=extent, seed=seed,
                    params={"n": n, "base_height": base_height,
                            "height_range": height_range})


def inverse_density_weights(bank: PoseBank, world,
                            eps: float = 1e-3) -> np.ndarray:
    dens = np.array([density_at(world, cam.position) for cam in bank.poses])
    w = 1.0 / (eps + dens)
    return w / w.sum()


def inverse_density_sample(bank: PoseBank, world, seed: int,
                           eps: float = 1e-3) -> Camera:
    """Draw one pose with probability proportional to 1/(eps + density)."""
    if not len(bank):
        raise ValueError("empty pose bank")
    w = inverse_density_weights(bank, world, eps)
    idx = int(keyed_rng("pose-draw", seed).choice(len(bank.poses), p=w))
    return bank.poses[idx]


def ground_forward(camera: Camera) -> np.ndarray:
    """Unit ground-plane projection of the camera forward axis."""
    f = camera.forward.copy()
    f[1] = 0.0
    norm = np.linalg.norm(f)
    if norm < 1e-9:
        raise ValueError("camera looks straight up/down; no ground heading")
    return f / norm


def forward_trajectory(start: Camera, steps: int = 100,
                       step_len: float = DEFAULT_STEP_LEN) -> Trajectory:
    """Translate along the forward axis' ground projection; fixed heading.

    Positions are computed as start + i * step * heading, so revisiting
    an index reproduces the pose bit-exactly.
    """
    if step_len <= 0:
        raise ValueError("step_len must be positive")
    heading = ground_forward(start)
    cams = tuple(
        Camera(position=start.position + i * step_len * heading,
               rotation=start.rotation, fov_deg=start.fov_deg,
               width=start.width, height=start.height)
        for i in range(steps + 1))
    return Trajectory(cameras=cams, kind="forward", step_len=step_len)


def cyclic_trajectory(center, radius: float, n_frames: int,
                      height: float = 1.5, facing: str = "tangent",
                      fov_deg: float = 60.0, width: int = 32,
                      height_px: int = 32) -> Trajectory:
    """Closed circular path at fixed height; last pose equals the first."""
    if n_frames < 2:
        raise ValueError("need at least 2 frames")
    cx, cz = float(center[0]), float(center[1])

    def pose(k: int) -> Camera:
        th = 2 * np.pi * (k % n_frames) / n_frames
        pos = np.array([cx + radius * np.sin(th), height,
                        cz + radius * np.cos(th)])
        if facing == "tangent":
            yaw = th + np.pi / 2
        elif facing == "center":
            yaw = th + np.pi
        else:  # fixed heading
            yaw = 0.0
        return Camera.from_yaw_pitch(pos, yaw, 0.0, fov_deg=fov_deg,
                                     width=width, height=height_px)

    cams = tuple(pose(k) for k in range(n_frames + 1))
    return Trajectory(cameras=cams, kind="cyclic",
                      step_len=2 * np.pi * radius / n_frames)


def orbit_trajectory(center, radius: float, n_frames: int,
                     **kw) -> Trajectory:
    traj = cyclic_trajectory(center, radius, n_frames, facing="center", **kw)
    return Trajectory(cameras=traj.cameras, kind="orbit",
                      step_len=traj.step_len)


def free_flight(start: Camera, steps: int, step_len: float = DEFAULT_STEP_LEN,
                seed: int = 0, yaw_jitter: float = 0.15) -> Trajectory:
    """Seeded wandering flight: forward steps with random yaw drift."""
    rng = keyed_rng("free-flight", seed)
    cams = [start]
    cam = start
    yaw = float(np.arctan2(cam.forward[0], cam.forward[2]))
    for _ in range(steps):
        yaw += rng.uniform(-yaw_jitter, yaw_jitter)
        heading = np.array([np.sin(yaw), 0.0, np.cos(yaw)])
        pos = cams[-1].position + step_len * heading
        cam = Camera.from_yaw_pitch(pos, yaw, 0.0, fov_deg=start.fov_deg,
                                    width=start.width, height=start.height)
        cams.append(cam)
    return Trajectory(cameras=tuple(cams), kind="free", step_len=step_len)


# --- line-oriented text serialization ---------------------------------------

def save_trajectory(traj: Trajectory, path: str):
    with open(path, "w") as fh:
        fh.write(f"# kind={traj.kind} step_len={traj.step_len!r}\n")
        for cam in traj.cameras:
            q = Rotation.from_matrix(cam.rotation).as_quat()  # x y z w
            vals = [*cam.position, q[3], q[0], q[1], q[2],
                    cam.fov_deg, cam.width, cam.height]
            fh.write(" ".join(repr(float(v)) if isinstance(v, float) or
                              isinstance(v, np.floating) else str(int(v))
                              for v in vals) + "\n")


def load_trajectory(path: str) -> Trajectory:
    kind, step_len = "free", 0.0
    cams = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    k, _, v = tok.partition("=")
                    if k == "kind":
                        kind = v
                    elif k == "step_len":
                        step_len = float(v)
                continue
            f = line.split()
            pos = np.array([float(v) for v in f[0:3]])
            qw, qx, qy, qz = (float(v) for v in f[3:7])
            rot = Rotation.from_quat([qx, qy, qz, qw]).as_matrix()
            cams.append(Camera(position=pos, rotation=rot,
                               fov_deg=float(f[7]), width=int(float(f[8])),
                               height=int(float(f[9]))))
    return Trajectory(cameras=tuple(cams), kind=kind, step_len=step_len)
