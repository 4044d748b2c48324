import type { FrameRequest, FrameResponse, WorldInfo } from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private base: string,
    private fetchFn: FetchLike,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok) throw new ApiError(res.status, `GET ${path} -> ${res.status}`);
    return (await res.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(res.status, `POST ${path} -> ${res.status}`);
    return (await res.json()) as T;
  }

  worldInfo(): Promise<WorldInfo> {
    return this.get<WorldInfo>("/world_info");
  }

  frame(req: FrameRequest): Promise<FrameResponse> {
    return this.post<FrameResponse>("/frame", req);
  }

  extend(rect: { x0: number; z0: number; x1: number; z1: number }) {
    return this.post<{ extent: unknown }>("/extend", rect);
  }
}

/**
 * Single in-flight frame request with latest-pose coalescing: while a
 * request is outstanding, newer requests overwrite each other and only
 * the most recent one is sent once the response arrives. A transport
 * failure flips the connection state, keeps the unsent request, and
 * waits for resume().
 */
export class FrameLoop {
  connected = true;
  onFrame: (req: FrameRequest, res: FrameResponse) => void = () => {};
  onConnection: (connected: boolean) => void = () => {};

  private pending: FrameRequest | null = null;
  private inFlight = false;

  constructor(private client: ApiClient) {}

  request(req: FrameRequest): void {
    this.pending = req;
    void this.pump();
  }

  resume(): void {
    void this.pump();
  }

  private setConnected(value: boolean): void {
    if (this.connected !== value) {
      this.connected = value;
      this.onConnection(value);
    }
  }

  private async pump(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      while (this.pending) {
        const req = this.pending;
        this.pending = null;
        try {
          const res = await this.client.frame(req);
          this.setConnected(true);
          this.onFrame(req, res);
        } catch (err) {
          // keep the newest intent for the reconnect attempt
          if (this.pending === null) this.pending = req;
          this.setConnected(false);
          return;
        }
      }
    } finally {
      this.inFlight = false;
    }
  }
}
