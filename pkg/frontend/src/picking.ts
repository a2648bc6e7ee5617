// Screen-click to world-ray conversion. The server does the actual
// intersection; the client only produces the ray.

import * as THREE from "three";
import type { RayJson } from "./api.js";

/**
 * Convert a click at (clientX, clientY) within a width x height viewport
 * into a world-space ray through the camera.
 */
export function screenPointToRay(
  camera: THREE.Camera,
  clientX: number,
  clientY: number,
  width: number,
  height: number,
): RayJson {
  const ndc = new THREE.Vector2(
    (clientX / width) * 2 - 1,
    -(clientY / height) * 2 + 1,
  );
  const caster = new THREE.Raycaster();
  caster.setFromCamera(ndc, camera);
  const o = caster.ray.origin;
  const d = caster.ray.direction.clone().normalize();
  return {
    origin: [o.x, o.y, o.z],
    direction: [d.x, d.y, d.z],
  };
}
