import type { Bookmark } from "./state.js";
import type { ExtentDescriptor, Pose } from "./types.js";

/** The 2D-context subset the minimap needs; canvas contexts satisfy it. */
export interface Ctx2D {
  fillStyle: string | unknown;
  strokeStyle: string | unknown;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
}

export interface MinimapData {
  extent: ExtentDescriptor;
  pose: Pose;
  trail: Pose[];
  bookmarks: Bookmark[];
}

export type WorldToCanvas = (x: number, z: number) => [number, number];

/** Fit the extent rectangle (plus 10% padding) into the canvas, preserving
 * aspect ratio; +x right, +z up. */
export function worldToCanvas(
  rect: [number, number, number, number],
  width: number,
  height: number,
): WorldToCanvas {
  const [x0, z0, x1, z1] = rect;
  const spanX = Math.max(x1 - x0, 1e-9);
  const spanZ = Math.max(z1 - z0, 1e-9);
  const scale = Math.min(width / (spanX * 1.2), height / (spanZ * 1.2));
  const cx = (x0 + x1) / 2;
  const cz = (z0 + z1) / 2;
  return (x, z) => [
    width / 2 + (x - cx) * scale,
    height / 2 - (z - cz) * scale,
  ];
}

export function drawMinimap(
  ctx: Ctx2D,
  width: number,
  height: number,
  data: MinimapData,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, width, height);
  const rect = data.extent.world_rect ?? [-1, -1, 1, 1];
  const map = worldToCanvas(rect, width, height);

  const [ex0, ey0] = map(rect[0], rect[1]);
  const [ex1, ey1] = map(rect[2], rect[3]);
  ctx.strokeStyle = "#3d6f4f";
  ctx.lineWidth = 1;
  ctx.strokeRect(
    Math.min(ex0, ex1),
    Math.min(ey0, ey1),
    Math.abs(ex1 - ex0),
    Math.abs(ey1 - ey0),
  );

  if (data.trail.length > 1) {
    ctx.strokeStyle = "#7f8ea3";
    ctx.beginPath();
    const [tx, ty] = map(data.trail[0].position[0], data.trail[0].position[2]);
    ctx.moveTo(tx, ty);
    for (const p of data.trail.slice(1)) {
      const [x, y] = map(p.position[0], p.position[2]);
      ctx.lineTo(x, y);
    }
    ctx.stroke();
  }

  ctx.fillStyle = "#d9a441";
  for (const b of data.bookmarks) {
    const [x, y] = map(b.pose.position[0], b.pose.position[2]);
    ctx.beginPath();
    ctx.arc(x, y, 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  const [px, py] = map(data.pose.position[0], data.pose.position[2]);
  ctx.fillStyle = "#e8eef7";
  ctx.beginPath();
  ctx.arc(px, py, 3, 0, 2 * Math.PI);
  ctx.fill();
  const [hx, hy] = map(
    data.pose.position[0] + 2 * Math.sin(data.pose.yaw),
    data.pose.position[2] + 2 * Math.cos(data.pose.yaw),
  );
  ctx.strokeStyle = "#e8eef7";
  ctx.beginPath();
  ctx.moveTo(px, py);
  ctx.lineTo(hx, hy);
  ctx.stroke();
}
