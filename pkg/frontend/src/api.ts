// Typed client for the measurement service HTTP API. All distances are
// meters on the wire; display strings come from the server verbatim.

export interface SnapshotInfo {
  id: string;
  timestamp: string;
  vertex_count: number | null;
  loaded: boolean;
  color: [number, number, number] | null;
  color_name: string | null;
}

export interface LayerInfo {
  id: string;
  timestamp: string;
  color: [number, number, number];
  color_name: string;
  vertex_count: number;
}

export interface MeshChunk {
  positions: number[]; // flat xyz triples
  indices: number[]; // flat triangle index triples
}

export interface LayerMesh {
  layer: string;
  color: [number, number, number] | null; // null for the live layer
  color_name?: string;
  timestamp: string | null;
  meshes: MeshChunk[];
}

export interface RayJson {
  origin: [number, number, number];
  direction: [number, number, number];
}

export interface HitJson {
  point: [number, number, number];
  ray_distance: number;
  layer: string;
  timestamp: string | null;
  mesh_index: number;
  triangle_index: number;
}

export interface PinJson {
  x: number;
  y: number;
  z: number;
  layer: string;
  time: string;
}

export interface SegmentJson {
  from: PinJson;
  to: PinJson;
  distance_m: number;
  distance_display: string;
  elapsed_s: number;
}

export interface PinResponse {
  pin: PinJson;
  segments: SegmentJson[];
  label: string | null;
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class TmmClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const payload = await resp.json();
    if (!resp.ok) {
      throw new ApiError(
        payload.error ?? "Unknown",
        payload.message ?? resp.statusText,
        resp.status,
      );
    }
    return payload as T;
  }

  async listSnapshots(): Promise<SnapshotInfo[]> {
    const body = await this.request<{ snapshots: SnapshotInfo[] }>("GET", "/api/snapshots");
    return body.snapshots;
  }

  async saveSnapshot(): Promise<string> {
    const body = await this.request<{ id: string }>("POST", "/api/snapshots");
    return body.id;
  }

  async loadSnapshot(id: string): Promise<LayerInfo[]> {
    const body = await this.request<{ loaded: LayerInfo[] }>(
      "POST",
      `/api/snapshots/${id}/load`,
    );
    return body.loaded;
  }

  unloadSnapshot(id: string): Promise<unknown> {
    return this.request("DELETE", `/api/snapshots/${id}/load`);
  }

  layers(): Promise<{ live: { visible: boolean; mesh_count: number }; loaded: LayerInfo[] }> {
    return this.request("GET", "/api/layers");
  }

  layerMesh(id: string): Promise<LayerMesh> {
    return this.request("GET", `/api/layers/${id}/mesh`);
  }

  async raycast(ray: RayJson): Promise<HitJson | null> {
    const body = await this.request<{ hit: HitJson | null }>("POST", "/api/raycast", ray);
    return body.hit;
  }

  placePin(token: string, ray: RayJson): Promise<PinResponse> {
    return this.request("POST", `/api/sessions/${token}/pins`, { ray });
  }

  clearPins(token: string): Promise<unknown> {
    return this.request("DELETE", `/api/sessions/${token}/pins`);
  }

  setSettings(
    token: string,
    settings: { units?: string; font_base?: number; line_width?: number; mode?: string },
  ) {
    return this.request("PUT", `/api/sessions/${token}/settings`, settings);
  }

  // `scale` is a multiplicative delta applied to the current view scale.
  setView(token: string, view: { scale?: number }): Promise<{ scale: number }> {
    return this.request("PUT", `/api/sessions/${token}/view`, view);
  }

  async measurements(token: string): Promise<SegmentJson[]> {
    const body = await this.request<{ measurements: SegmentJson[] }>(
      "GET",
      `/api/sessions/${token}/measurements`,
    );
    return body.measurements;
  }
}
