import { ApiClient, FrameLoop } from "./client.js";
import { base64ToBytes, decodeFloatBuffer, toGrayscale } from "./fbuf.js";
import { drawMinimap } from "./minimap.js";
import {
  applyAction,
  BookmarkStore,
  cycleLayer,
  keyToAction,
} from "./state.js";
import type { FrameRequest, Pose, WorldInfo } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export async function start(base: string): Promise<void> {
  const view = el<HTMLCanvasElement>("view");
  const minimap = el<HTMLCanvasElement>("minimap");
  const banner = el<HTMLDivElement>("banner");
  const layerLabel = el<HTMLSpanElement>("layer");

  const client = new ApiClient(base, (url, init) => fetch(url, init));
  const info: WorldInfo = await client.worldInfo();
  const loop = new FrameLoop(client);
  const bookmarks = new BookmarkStore(window.localStorage);

  let pose: Pose = { position: [0, 1.5, 0], yaw: 0, pitch: 0 };
  let layer = "full";
  let extent = info.extent;
  const trail: Pose[] = [pose];

  const requestFrame = () => {
    const req: FrameRequest = { pose, layers: [layer], resolution: 256 };
    loop.request(req);
  };

  loop.onFrame = (req, res) => {
    extent = res.extent;
    const payload = res.payloads[req.layers[0]];
    if (payload.encoding === "png") {
      const img = new Image();
      img.onload = () => {
        const ctx = view.getContext("2d")!;
        ctx.imageSmoothingEnabled = false;
        ctx.drawImage(img, 0, 0, view.width, view.height);
      };
      img.src = `data:image/png;base64,${payload.data}`;
    } else {
      const fb = decodeFloatBuffer(base64ToBytes(payload.data));
      const gray = toGrayscale(fb);
      const rgba = new Uint8ClampedArray(fb.width * fb.height * 4);
      for (let i = 0; i < gray.length; i++) {
        rgba[4 * i] = rgba[4 * i + 1] = rgba[4 * i + 2] = gray[i];
        rgba[4 * i + 3] = 255;
      }
      const ctx = view.getContext("2d")!;
      ctx.putImageData(new ImageData(rgba, fb.width, fb.height), 0, 0);
    }
    redrawMinimap();
  };

  loop.onConnection = (connected) => {
    banner.hidden = connected;
    if (connected) requestFrame();
  };
  // reconnect probe; resume() is a no-op while a request is in flight
  setInterval(() => {
    if (!loop.connected) loop.resume();
  }, 1000);

  const redrawMinimap = () => {
    const ctx = minimap.getContext("2d");
    if (ctx) {
      drawMinimap(ctx, minimap.width, minimap.height, {
        extent,
        pose,
        trail,
        bookmarks: bookmarks.list(),
      });
    }
  };

  window.addEventListener("keydown", (ev) => {
    if (!loop.connected) return; // input paused while disconnected
    if (ev.key === "b") {
      const name = window.prompt("bookmark name?");
      if (name) bookmarks.save(name, pose);
      redrawMinimap();
      return;
    }
    if (ev.key === "g") {
      const name = window.prompt("go to bookmark?");
      const saved = name ? bookmarks.recall(name) : null;
      if (saved) {
        pose = saved;
        trail.push(pose);
        requestFrame();
      }
      return;
    }
    const action = keyToAction(ev.key);
    if (!action) return;
    if (action.kind === "layer") {
      layer = cycleLayer(layer, info.layers);
      layerLabel.textContent = layer;
    } else {
      pose = applyAction(pose, action);
      trail.push(pose);
    }
    requestFrame();
  });

  layerLabel.textContent = layer;
  requestFrame();
  redrawMinimap();
}
