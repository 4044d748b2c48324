export interface Pose {
  position: [number, number, number];
  yaw: number;
  pitch: number;
}

export interface ExtentDescriptor {
  chunks: number;
  cell_rect: [number, number, number, number] | null;
  world_rect: [number, number, number, number] | null;
}

export interface WorldInfo {
  world_seed: number | null;
  format_version: number;
  near: number;
  far: number;
  samples_per_ray: number;
  fov_deg: number;
  lr_resolution: number;
  upsample_factor: number;
  hr_resolution: number;
  cell_width: number;
  layout_resolution: number;
  disparity_clip: number;
  disparity_scale: number;
  step_len: number;
  layers: string[];
  extent: ExtentDescriptor;
}

export interface FrameRequest {
  pose: Pose;
  resolution?: number;
  layers: string[];
  supersample?: boolean;
}

export interface Payload {
  encoding: "png" | "fbuf";
  data: string; // base64
}

export interface FrameResponse {
  frame_id: string;
  payloads: Record<string, Payload>;
  timing_ms: number;
  extent: ExtentDescriptor;
}
