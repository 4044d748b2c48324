import { describe, expect, it } from "vitest";

import { drawMinimap, worldToCanvas, type Ctx2D } from "./minimap.js";
import type { Pose } from "./types.js";

const pose = (x: number, z: number, yaw = 0): Pose => ({
  position: [x, 1.5, z],
  yaw,
  pitch: 0,
});

/** Records every drawing call for assertions. */
function recordingCtx() {
  const ops: { op: string; args: number[] }[] = [];
  const record =
    (op: string) =>
    (...args: number[]) =>
      void ops.push({ op, args });
  const ctx: Ctx2D = {
    fillStyle: "",
    strokeStyle: "",
    lineWidth: 1,
    clearRect: record("clearRect"),
    fillRect: record("fillRect"),
    strokeRect: record("strokeRect"),
    beginPath: record("beginPath"),
    moveTo: record("moveTo"),
    lineTo: record("lineTo"),
    arc: record("arc"),
    stroke: record("stroke"),
    fill: record("fill"),
  };
  return { ctx, ops };
}

describe("world-to-canvas mapping", () => {
  it("centers the extent and points +z up", () => {
    const map = worldToCanvas([-10, -10, 10, 10], 200, 200);
    expect(map(0, 0)).toEqual([100, 100]);
    const [, topY] = map(0, 10);
    expect(topY).toBeLessThan(100);
    const [rightX] = map(10, 0);
    expect(rightX).toBeGreaterThan(100);
  });

  it("preserves aspect ratio for non-square extents", () => {
    const map = worldToCanvas([0, 0, 20, 10], 100, 100);
    const [x0] = map(0, 0);
    const [x1] = map(20, 0);
    const [, y0] = map(0, 0);
    const [, y1] = map(0, 10);
    expect(Math.abs(x1 - x0) / 20).toBeCloseTo(Math.abs(y0 - y1) / 10, 9);
  });
});

describe("minimap drawing", () => {
  const extent = {
    chunks: 4,
    cell_rect: [0, 0, 64, 64] as [number, number, number, number],
    world_rect: [-5, -5, 5, 5] as [number, number, number, number],
  };

  it("draws the extent rectangle where the mapping says", () => {
    const { ctx, ops } = recordingCtx();
    drawMinimap(ctx, 200, 200, {
      extent,
      pose: pose(0, 0),
      trail: [],
      bookmarks: [],
    });
    const rect = ops.find((o) => o.op === "strokeRect")!;
    const map = worldToCanvas(extent.world_rect, 200, 200);
    const [x0, y1] = map(-5, -5);
    const [x1, y0] = map(5, 5);
    expect(rect.args).toEqual([
      Math.min(x0, x1),
      Math.min(y0, y1),
      Math.abs(x1 - x0),
      Math.abs(y1 - y0),
    ]);
  });

  it("draws the trail as a polyline through every pose", () => {
    const { ctx, ops } = recordingCtx();
    const trail = [pose(0, 0), pose(0, 1), pose(1, 1), pose(2, 1)];
    drawMinimap(ctx, 200, 200, { extent, pose: pose(2, 1), trail, bookmarks: [] });
    expect(ops.filter((o) => o.op === "lineTo").length).toBeGreaterThanOrEqual(
      trail.length - 1,
    );
  });

  it("draws one marker per bookmark", () => {
    const { ctx, ops } = recordingCtx();
    drawMinimap(ctx, 200, 200, {
      extent,
      pose: pose(0, 0),
      trail: [],
      bookmarks: [
        { name: "a", pose: pose(1, 1) },
        { name: "b", pose: pose(-2, 3) },
      ],
    });
    // two bookmark dots + one camera dot
    expect(ops.filter((o) => o.op === "arc")).toHaveLength(3);
  });

  it("copes with an empty extent", () => {
    const { ctx, ops } = recordingCtx();
    drawMinimap(ctx, 100, 100, {
      extent: { chunks: 0, cell_rect: null, world_rect: null },
      pose: pose(0, 0),
      trail: [pose(0, 0)],
      bookmarks: [],
    });
    expect(ops.some((o) => o.op === "strokeRect")).toBe(true);
  });
});
