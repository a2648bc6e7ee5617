"""The time machine: persist snapshots to a library directory and manage up
to six loaded overlay layers plus the live scan, each with a stable color
from the fixed six-color cycle.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from . import meshcore, spatial
from .errors import CapacityExceeded, NotFound, OrdinalOutOfRange, StorageFailure
from .meshcore import Snapshot, Timestamp
from .spatial import LIVE, LayerIndex
from .transform import RigidTransform

MAX_LOADED_LAYERS = 6

# (name, RGB) cycle for saved layers, in fixed ordinal order
COLOR_CYCLE = (
    ("cyan", (0, 255, 255)),
    ("lime", (0, 255, 0)),
    ("blue", (0, 0, 255)),
    ("orange", (255, 128, 0)),
    ("red", (255, 0, 0)),
    ("magenta", (255, 0, 255)),
)

MANIFEST_NAME = "index.json"


def assign_color(ordinal: int):
    """RGB for a layer ordinal in the color cycle."""
    if not 0 <= ordinal < len(COLOR_CYCLE):
        raise OrdinalOutOfRange(
            f"color ordinal must be in 0..{len(COLOR_CYCLE) - 1}, got {ordinal}"
        )
    return COLOR_CYCLE[ordinal][1]


def color_name(ordinal: int) -> str:
    if not 0 <= ordinal < len(COLOR_CYCLE):
        raise OrdinalOutOfRange(f"bad color ordinal {ordinal}")
    return COLOR_CYCLE[ordinal][0]


@dataclass
class LoadedLayer:
    snapshot: Snapshot
    color_ordinal: int
    index: LayerIndex
    visible: bool = True

    @property
    def color(self):
        return assign_color(self.color_ordinal)

    @property
    def color_name(self) -> str:
        return color_name(self.color_ordinal)


@dataclass
class LiveLayer:
    meshes: list = field(default_factory=list)
    anchor: RigidTransform = field(default_factory=RigidTransform.identity)
    visible: bool = True
    _index: LayerIndex | None = None

    @property
    def index(self) -> LayerIndex:
        if self._index is None:
            self._index = spatial.build_index(self.meshes, layer_id=LIVE)
        return self._index


class LayerRegistry:
    """Single-writer registry over one snapshot library directory.

    Mutations are serialized behind a lock; loaded layer contents are
    immutable, so ray casts and listings can read them concurrently.
    """

    def __init__(self, library_path):
        self.library_path = Path(library_path)
        self.library_path.mkdir(parents=True, exist_ok=True)
        self.live = LiveLayer()
        self.loaded: list[LoadedLayer] = []
        self._lock = threading.Lock()

    # -- manifest -----------------------------------------------------------

    def _manifest_path(self) -> Path:
        return self.library_path / MANIFEST_NAME

    def _read_manifest(self) -> list[dict]:
        path = self._manifest_path()
        if not path.exists():
            return []
        try:
            return json.loads(path.read_text())["snapshots"]
        except (OSError, ValueError, KeyError) as exc:
            raise StorageFailure(f"unreadable manifest: {exc}") from None

    def _write_manifest(self, entries: list[dict]):
        entries = sorted(entries, key=lambda e: (e["timestamp"], e["id"]))
        payload = json.dumps({"snapshots": entries}, indent=2)
        try:
            self._manifest_path().write_text(payload)
        except OSError as exc:
            raise StorageFailure(str(exc)) from None

    # -- persistence ----------------------------------------------------------

    def save_room(self, now: Timestamp | None = None) -> str:
        """Capture the live meshes, write the snapshot file, return its id."""
        with self._lock:
            now = now or Timestamp.now()
            snap = meshcore.capture_snapshot(self.live.meshes, self.live.anchor, now)
            doc = meshcore.serialize_snapshot(snap)
            sid = meshcore.content_id(doc)
            path = self.library_path / f"{sid}{meshcore.FILE_EXTENSION}"
            if path.exists() and path.read_bytes() != doc:
                raise StorageFailure(f"id collision for {sid}")
            try:
                path.write_bytes(doc)
            except OSError as exc:
                raise StorageFailure(str(exc)) from None
            entries = [e for e in self._read_manifest() if e["id"] != sid]
            entries.append(
                {
                    "id": sid,
                    "timestamp": now.to_iso(),
                    "file": path.name,
                    "vertex_count": snap.vertex_count,
                }
            )
            self._write_manifest(entries)
            return sid

    def load_rooms(self, ids) -> list[dict]:
        """Load snapshots as overlay layers; fails atomically on any error."""
        ids = list(ids)
        with self._lock:
            if len(self.loaded) + len(ids) > MAX_LOADED_LAYERS:
                raise CapacityExceeded(
                    f"{len(self.loaded)} loaded + {len(ids)} requested exceeds "
                    f"the {MAX_LOADED_LAYERS}-layer cap"
                )
            loaded_ids = {l.snapshot.id for l in self.loaded}
            by_id = {e["id"]: e for e in self._read_manifest()}
            staged = []
            used = {l.color_ordinal for l in self.loaded}
            for sid in ids:
                if sid in loaded_ids:
                    raise StorageFailure(f"snapshot {sid} is already loaded")
                entry = by_id.get(sid)
                if entry is None:
                    raise NotFound(f"no snapshot with id {sid}")
                doc = (self.library_path / entry["file"]).read_bytes()
                snap = meshcore.deserialize_snapshot(doc)
                snap = Snapshot(
                    meshes=snap.meshes,
                    timestamp=snap.timestamp,
                    anchor_pose=snap.anchor_pose,
                    id=sid,
                )
                ordinal = min(o for o in range(MAX_LOADED_LAYERS) if o not in used)
                used.add(ordinal)
                index = spatial.build_index(snap, layer_id=sid)
                staged.append(LoadedLayer(snap, ordinal, index))
                loaded_ids.add(sid)
            self.loaded.extend(staged)
            return [self._describe(l) for l in staged]

    def unload_room(self, sid: str):
        """Drop a loaded layer; remaining layers keep their colors."""
        with self._lock:
            for i, layer in enumerate(self.loaded):
                if layer.snapshot.id == sid:
                    del self.loaded[i]
                    return
            raise NotFound(f"snapshot {sid} is not loaded")

    def list_rooms(self) -> list[dict]:
        """Library contents ordered by timestamp, with load state merged in."""
        loaded = {l.snapshot.id: l for l in self.loaded}
        out = []
        for entry in self._read_manifest():
            layer = loaded.get(entry["id"])
            out.append(
                {
                    "id": entry["id"],
                    "timestamp": entry["timestamp"],
                    "vertex_count": entry.get("vertex_count"),
                    "loaded": layer is not None,
                    "color": layer.color if layer else None,
                    "color_name": layer.color_name if layer else None,
                }
            )
        return out

    # -- live layer ---------------------------------------------------------

    def toggle_realtime_mesh(self) -> bool:
        with self._lock:
            self.live.visible = not self.live.visible
            return self.live.visible

    def reset_room_position(self, fresh_meshes, anchor: RigidTransform | None = None):
        """Replace the live scan; saved layers are untouched."""
        with self._lock:
            self.live = LiveLayer(
                meshes=list(fresh_meshes),
                anchor=anchor or RigidTransform.identity(),
                visible=self.live.visible,
            )

    # -- ray-cast targets -----------------------------------------------------

    def ray_targets(self, layers=None, include_hidden=False) -> list[LayerIndex]:
        """Ordered cast targets: live first (ordinal 0), then loaded layers.

        ``layers``: optional iterable of layer ids (or LIVE) to restrict to.
        Hidden layers are skipped unless the caller opts in.
        """
        wanted = None if layers is None else set(layers)
        targets = []
        if (self.live.visible or include_hidden) and (wanted is None or LIVE in wanted):
            if self.live.meshes:
                targets.append(self.live.index)
        for layer in self.loaded:
            if not layer.visible and not include_hidden:
                continue
            if wanted is None or layer.snapshot.id in wanted:
                targets.append(layer.index)
        return targets

    def _describe(self, layer: LoadedLayer) -> dict:
        return {
            "id": layer.snapshot.id,
            "timestamp": layer.snapshot.timestamp.to_iso(),
            "color": layer.color,
            "color_name": layer.color_name,
            "vertex_count": layer.snapshot.vertex_count,
        }

    def loaded_layers(self) -> list[dict]:
        return [self._describe(l) for l in self.loaded]
