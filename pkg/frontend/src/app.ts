// Application state: ties the API client to the scene model. Pure
// coordination, no DOM — main.ts owns the canvas and input events.

import * as THREE from "three";
import { TmmClient, ApiError } from "./api.js";
import type { RayJson, SegmentJson } from "./api.js";
import { SceneModel } from "./viewer.js";

export class ViewerApp {
  readonly model = new SceneModel();
  viewScale = 1.0;

  constructor(
    readonly client: TmmClient,
    readonly sessionToken: string = crypto.randomUUID(),
  ) {}

  async refreshLive(): Promise<void> {
    this.model.setLayer(await this.client.layerMesh("live"));
  }

  async loadLayer(id: string): Promise<void> {
    await this.client.loadSnapshot(id);
    this.model.setLayer(await this.client.layerMesh(id));
  }

  async unloadLayer(id: string): Promise<void> {
    await this.client.unloadSnapshot(id);
    this.model.removeLayer(id);
  }

  /**
   * Drop a pin along a ray. Returns the label of the newly completed
   * segment (null for the first pin). A miss leaves state unchanged.
   */
  async placePin(ray: RayJson): Promise<string | null> {
    let resp;
    try {
      resp = await this.client.placePin(this.sessionToken, ray);
    } catch (err) {
      if (err instanceof ApiError && err.code === "NoHit") return null;
      throw err;
    }
    this.model.addPinMarker([resp.pin.x, resp.pin.y, resp.pin.z]);
    this.model.setMeasurements(resp.segments);
    return resp.label;
  }

  async clearPins(): Promise<void> {
    await this.client.clearPins(this.sessionToken);
    this.model.clearPins();
  }

  async measurements(): Promise<SegmentJson[]> {
    return this.client.measurements(this.sessionToken);
  }

  /**
   * Shrink or grow the whole scene (world-in-miniature style). Applies
   * the same multiplicative delta to the server session and the local
   * scene graph; measurements are world-space and must not change.
   */
  async zoomWorld(deltaScale: number): Promise<number> {
    const { scale } = await this.client.setView(this.sessionToken, { scale: deltaScale });
    this.viewScale = scale;
    this.model.setViewScale(scale);
    return scale;
  }

  cameraForRoom(aspect: number): THREE.PerspectiveCamera {
    const camera = new THREE.PerspectiveCamera(60, aspect, 0.01, 100);
    camera.position.set(0, -3.2, 2.2);
    camera.up.set(0, 0, 1);
    camera.lookAt(0, 0, 0.8);
    return camera;
  }
}
