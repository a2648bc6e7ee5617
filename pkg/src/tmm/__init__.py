"""Time-machine mesh measurement engine.

Capture timestamped triangle-mesh snapshots of a scene, overlay past
snapshots onto the present, and measure displacement across time with
ray-cast pins. A deterministic scene simulator stands in for live sensing.
"""
from .errors import TmmError
from .meshcore import (
    Mesh,
    Snapshot,
    Timestamp,
    capture_snapshot,
    deserialize_snapshot,
    make_mesh,
    serialize_snapshot,
)
from .registry import COLOR_CYCLE, LayerRegistry, assign_color
from .spatial import LIVE, Hit, Ray, build_index, ray_cast
from .transform import (
    RigidTransform,
    ViewState,
    apply,
    compose,
    estimate_rigid,
    invert,
    manipulate_view,
    rigid_from_parts,
)

__all__ = [
    "TmmError",
    "Mesh",
    "Snapshot",
    "Timestamp",
    "make_mesh",
    "capture_snapshot",
    "serialize_snapshot",
    "deserialize_snapshot",
    "LayerRegistry",
    "COLOR_CYCLE",
    "assign_color",
    "LIVE",
    "Ray",
    "Hit",
    "build_index",
    "ray_cast",
    "RigidTransform",
    "ViewState",
    "rigid_from_parts",
    "apply",
    "compose",
    "invert",
    "estimate_rigid",
    "manipulate_view",
]

__version__ = "0.1.0"
