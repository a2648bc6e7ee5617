"""Triangle-mesh value types, snapshot capture by deep copy, and the
versioned XML snapshot file format.

Coordinates are float64 and are serialized with shortest round-trip decimal
representation (``repr``), so parse(serialize(x)) == x bit-exactly.
"""
from __future__ import annotations

import hashlib
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import (
    IndexOutOfRange,
    MalformedDocument,
    NonFiniteCoordinate,
    SchemaViolation,
    UnsupportedVersion,
)
from .transform import RigidTransform, rigid_from_parts

SCHEMA_VERSION = "1"
FILE_EXTENSION = ".tmm.xml"


@dataclass(frozen=True, order=True)
class Timestamp:
    """UTC instant at millisecond resolution."""

    epoch_ms: int

    @staticmethod
    def now() -> "Timestamp":
        return Timestamp(int(datetime.now(timezone.utc).timestamp() * 1000))

    @staticmethod
    def from_iso(text: str) -> "Timestamp":
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return Timestamp(round(dt.timestamp() * 1000))

    def to_iso(self) -> str:
        dt = datetime.fromtimestamp(self.epoch_ms / 1000.0, tz=timezone.utc)
        # rebuild milliseconds from the integer to dodge float rounding
        ms = self.epoch_ms % 1000
        return dt.strftime("%Y-%m-%dT%H:%M:%S") + f".{ms:03d}Z"

    def seconds_since(self, other: "Timestamp") -> float:
        return (self.epoch_ms - other.epoch_ms) / 1000.0

    def plus_ms(self, delta_ms: int) -> "Timestamp":
        return Timestamp(self.epoch_ms + int(delta_ms))


class Mesh:
    """Immutable vertex/triangle soup in a common frame.

    ``vertices``: (V, 3) float64, ``triangles``: (T, 3) int64 indexing vertices.
    Winding order is preserved exactly through copy and serialization.
    """

    __slots__ = ("vertices", "triangles")

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray):
        self.vertices = vertices
        self.triangles = triangles

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(
            self.triangles, other.triangles
        )

    def __hash__(self):
        return hash((self.vertices.tobytes(), self.triangles.tobytes()))

    def __repr__(self):
        return f"Mesh(V={len(self.vertices)}, T={len(self.triangles)})"


def make_mesh(vertices, triangles) -> Mesh:
    """Validate and freeze a mesh. Degenerate (zero-area) triangles are legal."""
    v = np.array(vertices, dtype=np.float64, copy=True).reshape(-1, 3)
    t = np.array(triangles, dtype=np.int64, copy=True).reshape(-1, 3)
    if not np.all(np.isfinite(v)):
        raise NonFiniteCoordinate("mesh contains NaN or Inf coordinates")
    if t.size and (t.min() < 0 or t.max() >= len(v)):
        raise IndexOutOfRange(
            f"triangle index out of range for {len(v)} vertices"
        )
    v.setflags(write=False)
    t.setflags(write=False)
    return Mesh(v, t)


@dataclass(frozen=True)
class Snapshot:
    """Timestamped collection of meshes plus the anchor pose that maps
    snapshot-local coordinates to world.

    ``id`` is assigned by the registry (content hash) and is not part of the
    file format; equality compares content only.
    """

    meshes: tuple
    timestamp: Timestamp
    anchor_pose: RigidTransform = field(default_factory=RigidTransform.identity)
    id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "meshes", tuple(self.meshes))

    def __eq__(self, other):
        if not isinstance(other, Snapshot):
            return NotImplemented
        return (
            self.timestamp == other.timestamp
            and self.anchor_pose == other.anchor_pose
            and self.meshes == other.meshes
        )

    def __hash__(self):
        return hash((self.timestamp, self.anchor_pose, self.meshes))

    @property
    def vertex_count(self) -> int:
        return sum(len(m.vertices) for m in self.meshes)

    def world_meshes(self) -> list[Mesh]:
        """Meshes with the anchor pose applied (identity pose is a no-op)."""
        from . import transform

        if self.anchor_pose.is_identity():
            return list(self.meshes)
        return [
            make_mesh(transform.apply(self.anchor_pose, m.vertices), m.triangles)
            for m in self.meshes
        ]


def capture_snapshot(live_meshes, anchor: RigidTransform, now: Timestamp) -> Snapshot:
    """Deep-copy the live meshes under a timestamp; later mutation of the
    sources can never affect the snapshot."""
    copies = [make_mesh(m.vertices, m.triangles) for m in live_meshes]
    return Snapshot(meshes=copies, timestamp=now, anchor_pose=anchor)


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_snapshot(s: Snapshot) -> bytes:
    """Snapshot -> versioned XML document (see the .tmm.xml schema)."""
    root = ET.Element("TimeMachineSnapshot", {"version": SCHEMA_VERSION})
    ET.SubElement(root, "Timestamp", {"utc": s.timestamp.to_iso()})
    pose = ET.SubElement(root, "AnchorPose")
    r = s.anchor_pose.rotation
    ET.SubElement(
        pose,
        "Rotation",
        {f"m{i}{j}": _fmt(r[i, j]) for i in range(3) for j in range(3)},
    )
    t = s.anchor_pose.translation
    ET.SubElement(pose, "Translation", {"x": _fmt(t[0]), "y": _fmt(t[1]), "z": _fmt(t[2])})
    for mesh in s.meshes:
        m = ET.SubElement(root, "Mesh")
        vs = ET.SubElement(m, "Vertices", {"count": str(len(mesh.vertices))})
        vs.text = " ".join(_fmt(x) for x in mesh.vertices.ravel())
        ts = ET.SubElement(m, "Triangles", {"count": str(len(mesh.triangles))})
        ts.text = " ".join(str(int(i)) for i in mesh.triangles.ravel())
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def _require_attr(elem, name):
    value = elem.get(name)
    if value is None:
        raise SchemaViolation(f"<{elem.tag}> missing attribute {name!r}")
    return value


def _parse_float(text, context):
    try:
        x = float(text)
    except ValueError:
        raise SchemaViolation(f"bad float {text!r} in {context}") from None
    if not np.isfinite(x):
        raise SchemaViolation(f"non-finite value in {context}")
    return x


def deserialize_snapshot(doc: bytes) -> Snapshot:
    """Parse a snapshot document, validating structure and every invariant."""
    try:
        root = ET.fromstring(doc)
    except ET.ParseError as exc:
        raise MalformedDocument(str(exc)) from None
    if root.tag != "TimeMachineSnapshot":
        raise MalformedDocument(f"unexpected root element <{root.tag}>")
    version = _require_attr(root, "version")
    if version != SCHEMA_VERSION:
        raise UnsupportedVersion(f"unsupported snapshot version {version!r}")

    ts_elem = root.find("Timestamp")
    if ts_elem is None:
        raise SchemaViolation("missing <Timestamp>")
    try:
        timestamp = Timestamp.from_iso(_require_attr(ts_elem, "utc"))
    except ValueError as exc:
        raise SchemaViolation(f"bad timestamp: {exc}") from None

    pose_elem = root.find("AnchorPose")
    if pose_elem is None:
        raise SchemaViolation("missing <AnchorPose>")
    rot_elem = pose_elem.find("Rotation")
    tra_elem = pose_elem.find("Translation")
    if rot_elem is None or tra_elem is None:
        raise SchemaViolation("AnchorPose needs <Rotation> and <Translation>")
    r = np.array(
        [
            [_parse_float(_require_attr(rot_elem, f"m{i}{j}"), "Rotation") for j in range(3)]
            for i in range(3)
        ]
    )
    t = np.array([_parse_float(_require_attr(tra_elem, k), "Translation") for k in "xyz"])
    try:
        anchor = rigid_from_parts(r, t)
    except Exception as exc:
        raise SchemaViolation(f"anchor pose is not a rigid transform: {exc}") from None

    meshes = []
    for m_elem in root.findall("Mesh"):
        vs = m_elem.find("Vertices")
        ts = m_elem.find("Triangles")
        if vs is None or ts is None:
            raise SchemaViolation("Mesh needs <Vertices> and <Triangles>")
        vcount = int(_require_attr(vs, "count"))
        tcount = int(_require_attr(ts, "count"))
        vtokens = (vs.text or "").split()
        ttokens = (ts.text or "").split()
        if len(vtokens) != 3 * vcount:
            raise SchemaViolation(
                f"expected {3 * vcount} vertex numbers, found {len(vtokens)}"
            )
        if len(ttokens) != 3 * tcount:
            raise SchemaViolation(
                f"expected {3 * tcount} triangle indices, found {len(ttokens)}"
            )
        verts = np.array(
            [_parse_float(tok, "Vertices") for tok in vtokens], dtype=np.float64
        ).reshape(-1, 3)
        try:
            tris = np.array([int(tok) for tok in ttokens], dtype=np.int64).reshape(-1, 3)
        except ValueError:
            raise SchemaViolation("non-integer triangle index") from None
        try:
            meshes.append(make_mesh(verts, tris))
        except (IndexOutOfRange, NonFiniteCoordinate) as exc:
            raise SchemaViolation(str(exc)) from None

    return Snapshot(meshes=meshes, timestamp=timestamp, anchor_pose=anchor)


def content_id(doc: bytes) -> str:
    """Stable content-addressed identifier for a serialized snapshot."""
    return hashlib.sha256(doc).hexdigest()[:16]
