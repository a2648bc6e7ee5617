// Scene-graph model for the viewer: overlay layers, pin markers, and
// measurement lines with labels. Rendering (WebGL canvas, controls) is
// wired up separately in main.ts so this module also runs headless.

import * as THREE from "three";
import type { LayerMesh, SegmentJson } from "./api.js";

const LIVE_COLOR = 0xaaaaaa;
const PIN_RADIUS = 0.02;

function chunkToGeometry(positions: number[], indices: number[]): THREE.BufferGeometry {
  const geo = new THREE.BufferGeometry();
  geo.setAttribute("position", new THREE.Float32BufferAttribute(positions, 3));
  geo.setIndex(indices);
  geo.computeVertexNormals();
  return geo;
}

function rgbToColor(rgb: [number, number, number] | null): THREE.Color {
  if (rgb === null) return new THREE.Color(LIVE_COLOR);
  return new THREE.Color(rgb[0] / 255, rgb[1] / 255, rgb[2] / 255);
}

/**
 * A text label anchored at a world point. The sprite texture is only
 * created when a DOM canvas is available; the text itself always lives
 * in userData so logic and tests never depend on WebGL.
 */
export function makeLabel(text: string, position: THREE.Vector3): THREE.Sprite {
  const material = new THREE.SpriteMaterial({ sizeAttenuation: false });
  if (typeof document !== "undefined") {
    const canvas = document.createElement("canvas");
    canvas.width = 256;
    canvas.height = 64;
    const ctx = canvas.getContext("2d");
    if (ctx) {
      ctx.fillStyle = "rgba(0,0,0,0.6)";
      ctx.fillRect(0, 0, canvas.width, canvas.height);
      ctx.fillStyle = "#ffffff";
      ctx.font = "32px sans-serif";
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(text, canvas.width / 2, canvas.height / 2);
      material.map = new THREE.CanvasTexture(canvas);
    }
  }
  const sprite = new THREE.Sprite(material);
  // sizeAttenuation=false keeps on-screen (angular) size constant with
  // distance, matching how the service scales label fonts.
  sprite.scale.set(0.16, 0.04, 1);
  sprite.position.copy(position);
  sprite.userData.text = text;
  return sprite;
}

export class SceneModel {
  readonly scene = new THREE.Scene();
  readonly world = new THREE.Group(); // scaled/rotated by view manipulation
  private readonly layerGroups = new Map<string, THREE.Group>();
  private readonly pinGroup = new THREE.Group();
  private readonly measureGroup = new THREE.Group();

  constructor() {
    this.world.name = "world";
    this.pinGroup.name = "pins";
    this.measureGroup.name = "measurements";
    this.world.add(this.pinGroup, this.measureGroup);
    this.scene.add(this.world);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 0.8);
    sun.position.set(3, 2, 6);
    this.scene.add(sun);
  }

  /** Add or replace the meshes for one layer ("LIVE" or a snapshot id). */
  setLayer(payload: LayerMesh): THREE.Group {
    this.removeLayer(payload.layer);
    const group = new THREE.Group();
    group.name = `layer:${payload.layer}`;
    const color = rgbToColor(payload.color);
    const opacity = payload.color === null ? 1.0 : 0.65;
    for (const chunk of payload.meshes) {
      const material = new THREE.MeshLambertMaterial({
        color,
        transparent: opacity < 1,
        opacity,
        side: THREE.DoubleSide,
      });
      group.add(new THREE.Mesh(chunkToGeometry(chunk.positions, chunk.indices), material));
    }
    this.layerGroups.set(payload.layer, group);
    this.world.add(group);
    return group;
  }

  removeLayer(layer: string): void {
    const group = this.layerGroups.get(layer);
    if (!group) return;
    this.world.remove(group);
    group.traverse((obj) => {
      if (obj instanceof THREE.Mesh) {
        obj.geometry.dispose();
        (obj.material as THREE.Material).dispose();
      }
    });
    this.layerGroups.delete(layer);
  }

  layerIds(): string[] {
    return [...this.layerGroups.keys()];
  }

  addPinMarker(position: [number, number, number]): THREE.Mesh {
    const marker = new THREE.Mesh(
      new THREE.SphereGeometry(PIN_RADIUS, 12, 8),
      new THREE.MeshLambertMaterial({ color: 0xffff00 }),
    );
    marker.position.set(...position);
    this.pinGroup.add(marker);
    return marker;
  }

  /**
   * Rebuild measurement lines + labels from the server's segment list.
   * Label text is the server's display string, verbatim.
   */
  setMeasurements(segments: SegmentJson[]): void {
    this.measureGroup.clear();
    for (const seg of segments) {
      const a = new THREE.Vector3(seg.from.x, seg.from.y, seg.from.z);
      const b = new THREE.Vector3(seg.to.x, seg.to.y, seg.to.z);
      const geo = new THREE.BufferGeometry().setFromPoints([a, b]);
      this.measureGroup.add(
        new THREE.Line(geo, new THREE.LineBasicMaterial({ color: 0xffffff })),
      );
      const mid = a.clone().add(b).multiplyScalar(0.5);
      this.measureGroup.add(makeLabel(seg.distance_display, mid));
    }
  }

  clearPins(): void {
    this.pinGroup.clear();
    this.measureGroup.clear();
  }

  labelTexts(): string[] {
    const texts: string[] = [];
    this.measureGroup.traverse((obj) => {
      if (obj instanceof THREE.Sprite) texts.push(obj.userData.text as string);
    });
    return texts;
  }

  pinCount(): number {
    return this.pinGroup.children.length;
  }

  /** Apply a view-only scale; world-space data is untouched. */
  setViewScale(scale: number): void {
    if (!(scale > 0)) throw new RangeError(`view scale must be positive, got ${scale}`);
    this.world.scale.setScalar(scale);
  }
}
