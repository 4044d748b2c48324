/** Decoder for the float-buffer wire format: "FBUF", u32 width, height,
 * channels (little-endian), then row-major float32 data. */

export interface FloatBuffer {
  width: number;
  height: number;
  channels: number;
  data: Float32Array;
}

const MAGIC = "FBUF";

export function decodeFloatBuffer(bytes: Uint8Array): FloatBuffer {
  if (bytes.length < 16) throw new Error("float buffer truncated");
  const magic = String.fromCharCode(...bytes.subarray(0, 4));
  if (magic !== MAGIC) throw new Error(`bad float buffer magic ${magic}`);
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const width = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const channels = view.getUint32(12, true);
  const n = width * height * channels;
  if (bytes.length < 16 + 4 * n) throw new Error("float buffer truncated");
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) data[i] = view.getFloat32(16 + 4 * i, true);
  return { width, height, channels, data };
}

export function base64ToBytes(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

/** Min-max normalize the first channel to 8-bit grayscale for display. */
export function toGrayscale(buf: FloatBuffer): Uint8ClampedArray {
  const { width, height, channels, data } = buf;
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < width * height; i++) {
    const v = data[i * channels];
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const span = hi - lo || 1;
  const out = new Uint8ClampedArray(width * height);
  for (let i = 0; i < width * height; i++) {
    out[i] = Math.round(((data[i * channels] - lo) / span) * 255);
  }
  return out;
}
