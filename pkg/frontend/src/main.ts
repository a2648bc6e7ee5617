// Browser entry point: canvas, controls, and a minimal layer panel.

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { TmmClient } from "./api.js";
import { ViewerApp } from "./app.js";
import { screenPointToRay } from "./picking.js";

const client = new TmmClient("");
const app = new ViewerApp(client);

const canvas = document.getElementById("view") as HTMLCanvasElement;
const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
const camera = app.cameraForRoom(window.innerWidth / window.innerHeight);
const controls = new OrbitControls(camera, canvas);
controls.target.set(0, 0, 0.8);

function resize() {
  renderer.setSize(window.innerWidth, window.innerHeight);
  camera.aspect = window.innerWidth / window.innerHeight;
  camera.updateProjectionMatrix();
}
window.addEventListener("resize", resize);
resize();

const status = document.getElementById("status")!;

canvas.addEventListener("dblclick", async (ev) => {
  const ray = screenPointToRay(camera, ev.clientX, ev.clientY, window.innerWidth, window.innerHeight);
  const label = await app.placePin(ray);
  status.textContent = label ?? "pin placed";
});

document.getElementById("clear")!.addEventListener("click", async () => {
  await app.clearPins();
  status.textContent = "cleared";
});

document.getElementById("shrink")!.addEventListener("click", () => app.zoomWorld(0.5));
document.getElementById("grow")!.addEventListener("click", () => app.zoomWorld(2.0));

async function buildLayerPanel() {
  const panel = document.getElementById("layers")!;
  panel.replaceChildren();
  for (const snap of await client.listSnapshots()) {
    const btn = document.createElement("button");
    btn.textContent = `${snap.timestamp}${snap.loaded ? ` [${snap.color_name}]` : ""}`;
    btn.addEventListener("click", async () => {
      if (snap.loaded) await app.unloadLayer(snap.id);
      else await app.loadLayer(snap.id);
      await buildLayerPanel();
    });
    panel.appendChild(btn);
  }
}

(async () => {
  await app.refreshLive();
  await buildLayerPanel();
})();

renderer.setAnimationLoop(() => {
  controls.update();
  renderer.render(app.model.scene, camera);
});
