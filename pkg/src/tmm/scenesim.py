"""Deterministic synthetic stand-in for a headset's spatial mapping.

Builds axis-aligned room scenes with movable box objects, emits noisy
triangulated scans, and runs scripted inspection scenarios (save / move /
load / pin / measure / manipulate_view / assert) against the real registry
and measurement modules.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import transform as xf
from .errors import AssertionFailed, TmmError
from .measure import MeasurementSession, measure_between, place_pin
from .meshcore import Mesh, Timestamp, make_mesh
from .registry import LayerRegistry
from .spatial import LIVE, Ray
from .transform import RigidTransform, ViewState, manipulate_view, rigid_from_parts

DEFAULT_EDGE_LENGTH = 0.05
DEFAULT_NOISE_SIGMA = 0.01
DEFAULT_PIN_JITTER = 0.005

SCENARIO_EPOCH = Timestamp.from_iso("2021-03-04T16:00:00.000Z")
STEP_CLOCK_MS = 60_000  # simulated minute per step

# face name -> (axis, sign); u/v run over the remaining two axes in order
FACES = {
    "top": (2, +1),
    "bottom": (2, -1),
    "east": (0, +1),
    "west": (0, -1),
    "north": (1, +1),
    "south": (1, -1),
}


@dataclass(frozen=True)
class BoxObject:
    id: str
    size: tuple  # (sx, sy, sz) meters, box centered on its pose
    pose: RigidTransform


@dataclass(frozen=True)
class SceneSpec:
    room: tuple  # (width, depth, height); floor at z = 0, centered in x/y
    objects: tuple


@dataclass(frozen=True)
class ScanConfig:
    edge_length: float = DEFAULT_EDGE_LENGTH
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    pin_jitter: float = DEFAULT_PIN_JITTER
    seed: int = 0

    def __post_init__(self):
        if not self.edge_length > 0:
            raise TmmError("sampling edge length must be positive")
        if self.noise_sigma < 0 or self.pin_jitter < 0:
            raise TmmError("noise magnitudes must be >= 0")


def _face_grid(size, axis, sign, edge_length):
    """Triangulated grid for one face of an origin-centered box.

    Returns (vertices (N,3) local, triangles, unit outward normal local).
    """
    sx = np.asarray(size, dtype=np.float64)
    ua, va = [a for a in range(3) if a != axis]
    nu = max(1, int(np.ceil(sx[ua] / edge_length)))
    nv = max(1, int(np.ceil(sx[va] / edge_length)))
    us = np.linspace(-sx[ua] / 2, sx[ua] / 2, nu + 1)
    vs = np.linspace(-sx[va] / 2, sx[va] / 2, nv + 1)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    verts = np.zeros((uu.size, 3))
    verts[:, ua] = uu.ravel()
    verts[:, va] = vv.ravel()
    verts[:, axis] = sign * sx[axis] / 2

    idx = np.arange((nu + 1) * (nv + 1)).reshape(nu + 1, nv + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    tris = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])

    normal = np.zeros(3)
    normal[axis] = float(sign)
    return verts, tris, normal


def _room_pose(room) -> RigidTransform:
    w, d, h = room
    return rigid_from_parts(np.eye(3), [0.0, 0.0, h / 2.0])


class Scene:
    """Ground-truth scene: exact geometry plus current object poses."""

    def __init__(self, spec: SceneSpec):
        self.spec = spec
        self.poses = {obj.id: obj.pose for obj in spec.objects}
        for obj in spec.objects:
            self._check_inside(obj.id)

    def _check_inside(self, obj_id):
        obj = self._object(obj_id)
        pose = self.poses[obj_id]
        s = np.asarray(obj.size) / 2
        corners = np.array(
            [[sx, sy, sz] for sx in (-s[0], s[0]) for sy in (-s[1], s[1]) for sz in (-s[2], s[2])]
        )
        world = xf.apply(pose, corners)
        w, d, h = self.spec.room
        lo = np.array([-w / 2, -d / 2, 0.0]) - 1e-9
        hi = np.array([w / 2, d / 2, h]) + 1e-9
        if (world < lo).any() or (world > hi).any():
            raise TmmError(f"object {obj_id!r} extends outside the room")

    def _object(self, obj_id) -> BoxObject:
        for obj in self.spec.objects:
            if obj.id == obj_id:
                return obj
        raise TmmError(f"no object with id {obj_id!r}")

    def move_object(self, obj_id, delta: RigidTransform):
        """Compose a rigid motion about the object's current center."""
        pose = self.poses[obj_id]
        center = pose.translation
        # rotate about the center, then translate
        r = delta.rotation @ pose.rotation
        t = delta.rotation @ (pose.translation - center) + center + delta.translation
        self.poses[obj_id] = rigid_from_parts(r, t)
        self._check_inside(obj_id)

    def object_center(self, obj_id) -> np.ndarray:
        return self.poses[obj_id].translation

    def feature_point(self, obj_id, feature, pose: RigidTransform | None = None):
        """Resolve 'face' or 'face@u,v' to an exact world point and outward
        normal, under the given pose (defaults to the current pose)."""
        obj = self._object(obj_id)
        pose = pose or self.poses[obj_id]
        name, _, uv = feature.partition("@")
        if name not in FACES:
            raise TmmError(f"unknown face {name!r}; valid: {sorted(FACES)}")
        axis, sign = FACES[name]
        u, v = (float(x) for x in uv.split(",")) if uv else (0.0, 0.0)
        if not (-1.0 <= u <= 1.0 and -1.0 <= v <= 1.0):
            raise TmmError("feature offsets must lie in [-1, 1]")
        s = np.asarray(obj.size) / 2
        ua, va = [a for a in range(3) if a != axis]
        local = np.zeros(3)
        local[axis] = sign * s[axis]
        local[ua] = u * s[ua]
        local[va] = v * s[va]
        n_local = np.zeros(3)
        n_local[axis] = float(sign)
        return xf.apply(pose, local), pose.rotation @ n_local


def generate_scene(spec_dict: dict) -> Scene:
    """Scene from a plain dict (the scenario file's ``scene`` block)."""
    room = spec_dict["room"]
    objects = []
    for o in spec_dict.get("objects", []):
        pos = np.asarray(o.get("position", [0.0, 0.0, 0.0]), dtype=np.float64)
        objects.append(
            BoxObject(
                id=o["id"],
                size=tuple(float(s) for s in o["size"]),
                pose=rigid_from_parts(np.eye(3), pos),
            )
        )
    spec = SceneSpec(
        room=(float(room["width"]), float(room["depth"]), float(room["height"])),
        objects=tuple(objects),
    )
    return Scene(spec)


def sample_scan(scene: Scene, config: ScanConfig, rng: np.random.Generator) -> list[Mesh]:
    """Triangulate every surface at the target density, jittering each vertex
    along its surface normal with zero-mean Gaussian noise."""
    meshes = []
    room_pose = _room_pose(scene.spec.room)

    def emit(size, pose, inward):
        for name, (axis, sign) in FACES.items():
            verts, tris, normal = _face_grid(size, axis, sign, config.edge_length)
            if inward:
                normal = -normal  # room surfaces face the interior
                tris = tris[:, ::-1]
            world = xf.apply(pose, verts)
            n_world = pose.rotation @ normal
            if config.noise_sigma > 0:
                jitter = rng.normal(0.0, config.noise_sigma, len(world))
                world = world + jitter[:, None] * n_world[None, :]
            meshes.append(make_mesh(world, tris))

    emit(scene.spec.room, room_pose, inward=True)
    for obj in scene.spec.objects:
        emit(obj.size, scene.poses[obj.id], inward=False)
    return meshes


def _disc_jitter(normal, radius, rng):
    """Uniform offset inside a disc of the given radius in the surface plane."""
    if radius <= 0:
        return np.zeros(3)
    # tangent basis perpendicular to the normal
    helper = np.array([1.0, 0.0, 0.0])
    if abs(normal[0]) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    t1 = np.cross(normal, helper)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    r = radius * np.sqrt(rng.uniform())
    theta = rng.uniform(0.0, 2.0 * np.pi)
    return r * (np.cos(theta) * t1 + np.sin(theta) * t2)


def load_script(path) -> dict:
    script = yaml.safe_load(Path(path).read_text())
    if not isinstance(script, dict) or "steps" not in script or "scene" not in script:
        raise TmmError("scenario file needs 'scene' and 'steps' sections")
    return script


def fixture_path(name: str) -> Path:
    """Path of a shipped scenario fixture, e.g. 'verify_s6'."""
    return Path(__file__).parent / "fixtures" / f"{name}.yaml"


class ScenarioRunner:
    """Executes one script against a real registry and measurement session."""

    def __init__(
        self,
        script: dict,
        library_path,
        seed: int = 0,
        noise_sigma: float | None = None,
        pin_jitter: float | None = None,
        registry: LayerRegistry | None = None,
        session: MeasurementSession | None = None,
    ):
        self.script = script
        scan = script.get("scan", {})
        self.config = ScanConfig(
            edge_length=float(scan.get("edge_length", DEFAULT_EDGE_LENGTH)),
            noise_sigma=float(
                scan.get("noise_sigma", DEFAULT_NOISE_SIGMA) if noise_sigma is None else noise_sigma
            ),
            pin_jitter=float(
                scan.get("pin_jitter", DEFAULT_PIN_JITTER) if pin_jitter is None else pin_jitter
            ),
            seed=seed,
        )
        self.rng = np.random.default_rng(seed)
        self.scene = generate_scene(script["scene"])
        self.registry = registry or LayerRegistry(library_path)
        self.session = session or MeasurementSession()
        self.view = ViewState()
        self.clock = SCENARIO_EPOCH
        self.save_ids: list[str] = []
        self.epoch_poses: list[dict] = []
        self.pin_truth: list[np.ndarray] = []
        self.measurements: list[dict] = []
        self.assertions: list[dict] = []
        self.step_log: list[dict] = []

    # -- step handlers ------------------------------------------------------

    def _rescan(self):
        self.registry.reset_room_position(sample_scan(self.scene, self.config, self.rng))

    def _do_save(self, params):
        sid = self.registry.save_room(now=self.clock)
        self.save_ids.append(sid)
        self.epoch_poses.append(dict(self.scene.poses))
        return {"id": sid, "timestamp": self.clock.to_iso()}

    def _do_move(self, params):
        obj = params["object"]
        t = np.asarray(params.get("translate", [0.0, 0.0, 0.0]), dtype=np.float64)
        rot = np.eye(3)
        if "rotate_z_deg" in params:
            rot = xf.rotation_about_z(np.deg2rad(float(params["rotate_z_deg"])))
        before = self.scene.object_center(obj).copy()
        self.scene.move_object(obj, rigid_from_parts(rot, t))
        after = self.scene.object_center(obj)
        self._rescan()
        return {
            "object": obj,
            "displacement_m": float(np.linalg.norm(after - before)),
        }

    def _do_load(self, params):
        sid = self.save_ids[int(params["save"])]
        layers = self.registry.load_rooms([sid])
        return {"loaded": layers}

    def _resolve_layer(self, layer):
        if layer == "live":
            return LIVE, self.scene.poses
        k = int(layer)
        return self.save_ids[k], self.epoch_poses[k]

    def _do_pin(self, params):
        obj = params["object"]
        feature = params["feature"]
        layer_id, poses = self._resolve_layer(params.get("layer", "live"))
        point, normal = self.scene.feature_point(obj, feature, pose=poses[obj])
        aim = point + _disc_jitter(normal, self.config.pin_jitter, self.rng)
        ray = Ray(aim + 0.5 * normal, -normal)
        targets = self.registry.ray_targets(layers=[layer_id])
        pin = place_pin(self.session, targets, ray, now=self.clock)
        self.pin_truth.append(point)
        return {"layer": layer_id, "position": [float(c) for c in pin.position]}

    def _do_measure(self, params):
        if len(self.session.pins) < 2:
            raise TmmError("measure needs at least two pins")
        a, b = self.session.pins[-2], self.session.pins[-1]
        result = measure_between(a, b)
        gt = float(np.linalg.norm(self.pin_truth[-1] - self.pin_truth[-2]))
        record = {
            "measured_m": result.distance_m,
            "ground_truth_m": gt,
            "elapsed_s": result.elapsed_s,
            "from_time": a.source_time.to_iso(),
            "to_time": b.source_time.to_iso(),
            "expected": params.get("expected"),
        }
        self.measurements.append(record)
        return record

    def _do_manipulate_view(self, params):
        before = [m["measured_m"] for m in self.measurements]
        delta = None
        if "rotate_z_deg" in params or "translate" in params:
            rot = xf.rotation_about_z(np.deg2rad(float(params.get("rotate_z_deg", 0.0))))
            delta = rigid_from_parts(rot, params.get("translate", [0.0, 0.0, 0.0]))
        self.view = manipulate_view(self.view, float(params.get("scale", 1.0)), delta)
        after = [m["measured_m"] for m in self.measurements]
        return {
            "scale": self.view.scale,
            "measurements_unchanged": before == after,
        }

    def _do_assert(self, params):
        if not self.measurements:
            raise TmmError("assert requires a prior measure step")
        measured = self.measurements[-1]["measured_m"]
        expected = float(params["expected"])
        if "tol_abs" in params:
            tol = float(params["tol_abs"])
        elif "tol_frac" in params:
            tol = float(params["tol_frac"]) * expected
        else:
            tol = 1e-6
        passed = abs(measured - expected) <= tol
        record = {
            "expected": expected,
            "measured": measured,
            "tolerance": tol,
            "passed": bool(passed),
        }
        self.assertions.append(record)
        return record

    # -- driver ---------------------------------------------------------------

    _HANDLERS = {
        "save": _do_save,
        "move": _do_move,
        "load": _do_load,
        "pin": _do_pin,
        "measure": _do_measure,
        "manipulate_view": _do_manipulate_view,
        "assert": _do_assert,
    }

    def run(self, strict: bool = False) -> dict:
        started = time.monotonic()
        self._rescan()
        for i, step in enumerate(self.script["steps"]):
            if len(step) != 1:
                raise TmmError(f"step {i} must have exactly one action, got {sorted(step)}")
            (action, params), = step.items()
            if action not in self._HANDLERS:
                raise TmmError(f"unknown scenario action {action!r}")
            self.clock = self.clock.plus_ms(STEP_CLOCK_MS)
            detail = self._HANDLERS[action](self, params or {})
            self.step_log.append({"index": i, "action": action, **detail})
        failures = [a for a in self.assertions if not a["passed"]]
        if strict and failures:
            f = failures[0]
            raise AssertionFailed(
                f"measured {f['measured']:.6f} m, expected {f['expected']:.6f} m "
                f"(tolerance {f['tolerance']:.6f} m)"
            )
        return {
            "name": self.script.get("name", "scenario"),
            "seed": self.config.seed,
            "noise_sigma": self.config.noise_sigma,
            "pin_jitter": self.config.pin_jitter,
            "steps": self.step_log,
            "layers": self.registry.loaded_layers(),
            "measurements": self.measurements,
            "assertions": self.assertions,
            "passed": not failures,
            "wall_time_s": time.monotonic() - started,
        }


def run_scenario(
    script: dict,
    library_path,
    seed: int = 0,
    noise_sigma: float | None = None,
    pin_jitter: float | None = None,
    registry: LayerRegistry | None = None,
    session: MeasurementSession | None = None,
    strict: bool = False,
) -> dict:
    runner = ScenarioRunner(
        script,
        library_path,
        seed=seed,
        noise_sigma=noise_sigma,
        pin_jitter=pin_jitter,
        registry=registry,
        session=session,
    )
    return runner.run(strict=strict)
