import type { Pose } from "./types.js";

/** Camera translation per keypress, matching the server's trajectory step. */
export const STEP_LEN = 0.192;
export const TURN_STEP = Math.PI / 24;
export const PITCH_LIMIT = Math.PI / 2 - 0.01;

/** Ground-plane heading; yaw 0 faces +z, matching the server camera. */
export function heading(yaw: number): [number, number] {
  return [Math.sin(yaw), Math.cos(yaw)];
}

export function moveForward(pose: Pose, dist: number): Pose {
  const [hx, hz] = heading(pose.yaw);
  const [x, y, z] = pose.position;
  return { ...pose, position: [x + dist * hx, y, z + dist * hz] };
}

export function strafe(pose: Pose, dist: number): Pose {
  const [x, y, z] = pose.position;
  // camera right axis on the ground plane
  return {
    ...pose,
    position: [x + dist * Math.cos(pose.yaw), y, z - dist * Math.sin(pose.yaw)],
  };
}

export function climb(pose: Pose, dist: number): Pose {
  const [x, y, z] = pose.position;
  return { ...pose, position: [x, y + dist, z] };
}

export function turn(pose: Pose, dyaw: number): Pose {
  return { ...pose, yaw: pose.yaw + dyaw };
}

export function pitchBy(pose: Pose, dpitch: number): Pose {
  const p = Math.max(-PITCH_LIMIT, Math.min(PITCH_LIMIT, pose.pitch + dpitch));
  return { ...pose, pitch: p };
}

export type Action =
  | { kind: "forward"; sign: 1 | -1 }
  | { kind: "strafe"; sign: 1 | -1 }
  | { kind: "climb"; sign: 1 | -1 }
  | { kind: "turn"; sign: 1 | -1 }
  | { kind: "pitch"; sign: 1 | -1 }
  | { kind: "layer" };

const KEYMAP: Record<string, Action> = {
  w: { kind: "forward", sign: 1 },
  s: { kind: "forward", sign: -1 },
  a: { kind: "strafe", sign: -1 },
  d: { kind: "strafe", sign: 1 },
  q: { kind: "climb", sign: -1 },
  e: { kind: "climb", sign: 1 },
  ArrowLeft: { kind: "turn", sign: -1 },
  ArrowRight: { kind: "turn", sign: 1 },
  ArrowUp: { kind: "pitch", sign: 1 },
  ArrowDown: { kind: "pitch", sign: -1 },
  l: { kind: "layer" },
};

export function keyToAction(key: string): Action | null {
  return KEYMAP[key] ?? null;
}

export function applyAction(pose: Pose, action: Action): Pose {
  switch (action.kind) {
    case "forward":
      return moveForward(pose, action.sign * STEP_LEN);
    case "strafe":
      return strafe(pose, action.sign * STEP_LEN);
    case "climb":
      return climb(pose, action.sign * STEP_LEN);
    case "turn":
      return turn(pose, action.sign * TURN_STEP);
    case "pitch":
      return pitchBy(pose, action.sign * TURN_STEP);
    case "layer":
      return pose;
  }
}

export function cycleLayer(current: string, layers: string[]): string {
  const i = layers.indexOf(current);
  return layers[(i + 1) % layers.length];
}

/** Minimal key-value persistence surface (window.localStorage satisfies it). */
export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export interface Bookmark {
  name: string;
  pose: Pose;
}

/**
 * Named pose bookmarks. Poses round-trip through JSON, which preserves
 * every finite double exactly, so recalling a bookmark re-requests the
 * byte-identical frame.
 */
export class BookmarkStore {
  constructor(
    private storage: StorageLike,
    private key = "skylands-bookmarks",
  ) {}

  list(): Bookmark[] {
    const raw = this.storage.getItem(this.key);
    if (!raw) return [];
    try {
      return JSON.parse(raw) as Bookmark[];
    } catch {
      return [];
    }
  }

  save(name: string, pose: Pose): void {
    const marks = this.list().filter((b) => b.name !== name);
    marks.push({ name, pose });
    this.storage.setItem(this.key, JSON.stringify(marks));
  }

  recall(name: string): Pose | null {
    const found = this.list().find((b) => b.name === name);
    return found ? found.pose : null;
  }
}
