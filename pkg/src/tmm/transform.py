"""Rigid motions: construction, application, composition, and least-squares
estimation from point correspondences, plus the display-only view transform.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfiguration, NonPositiveScale, NotARotation

_ORTHO_TOL = 1e-9


def _as_matrix(value) -> np.ndarray:
    m = np.asarray(value, dtype=np.float64)
    if m.shape != (3, 3):
        raise NotARotation(f"rotation must be 3x3, got shape {m.shape}")
    return m


def _as_vector(value) -> np.ndarray:
    v = np.asarray(value, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise NotARotation(f"translation must be a 3-vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation; construct through :func:`rigid_from_parts`."""

    rotation: np.ndarray
    translation: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    def __hash__(self):
        return hash((self.rotation.tobytes(), self.translation.tobytes()))

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def is_identity(self) -> bool:
        return np.array_equal(self.rotation, np.eye(3)) and not self.translation.any()


def rigid_from_parts(rotation, translation) -> RigidTransform:
    """Build a rigid transform, rejecting matrices that are not proper rotations."""
    r = _as_matrix(rotation)
    t = _as_vector(translation)
    if not np.all(np.isfinite(r)) or not np.all(np.isfinite(t)):
        raise NotARotation("non-finite entries")
    if np.abs(r.T @ r - np.eye(3)).max() > _ORTHO_TOL:
        raise NotARotation("matrix is not orthonormal")
    if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
        raise NotARotation("matrix is a reflection (det != +1)")
    r.setflags(write=False)
    t.setflags(write=False)
    return RigidTransform(r, t)


def apply(xf: RigidTransform, target):
    """Apply ``R p + T``.

    ``target`` may be a single point, an (N, 3) array of points, or a
    Snapshot (every vertex transformed; triangles and timestamp untouched).
    """
    from . import meshcore

    if isinstance(target, meshcore.Snapshot):
        meshes = [
            meshcore.make_mesh(apply(xf, m.vertices), m.triangles)
            for m in target.meshes
        ]
        return meshcore.Snapshot(
            meshes=meshes,
            timestamp=target.timestamp,
            anchor_pose=target.anchor_pose,
            id=target.id,
        )
    p = np.asarray(target, dtype=np.float64)
    return p @ xf.rotation.T + xf.translation


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equal to applying ``b`` first, then ``a``."""
    return rigid_from_parts(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(a: RigidTransform) -> RigidTransform:
    rt = a.rotation.T
    return rigid_from_parts(rt, -rt @ a.translation)


def rotation_about_z(angle_rad: float) -> np.ndarray:
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def estimate_rigid(sources, targets) -> RigidTransform:
    """Least-squares rigid motion mapping sources onto targets.

    Orthogonal-Procrustes solution via SVD of the cross-covariance, with the
    reflection corrected so det(R) = +1 (Kabsch / Arun).
    """
    p = np.asarray(sources, dtype=np.float64)
    q = np.asarray(targets, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3 or p.shape != q.shape:
        raise DegenerateConfiguration("need matching (N, 3) point sets")
    if p.shape[0] < 3:
        raise DegenerateConfiguration("need at least 3 correspondences")

    cp = p.mean(axis=0)
    cq = q.mean(axis=0)
    pc = p - cp
    qc = q - cq

    # collinear sources leave the rotation about the line unobservable
    s_src = np.linalg.svd(pc, compute_uv=False)
    if s_src[1] <= 1e-12 * max(s_src[0], 1.0):
        raise DegenerateConfiguration("source points are collinear")

    h = pc.T @ qc
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    # re-orthonormalize to absorb SVD round-off before the strict ctor check
    uu, _, vv = np.linalg.svd(r)
    r = uu @ vv
    t = cq - r @ cp
    return rigid_from_parts(r, t)


@dataclass(frozen=True)
class ViewState:
    """Display-only similarity transform world -> screen; never touches data."""

    scale: float = 1.0
    view_rigid: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        if not self.scale > 0:
            raise NonPositiveScale(f"scale must be > 0, got {self.scale}")


def manipulate_view(
    view: ViewState,
    delta_scale: float = 1.0,
    delta_rigid: RigidTransform | None = None,
) -> ViewState:
    if not delta_scale > 0:
        raise NonPositiveScale(f"scale factor must be > 0, got {delta_scale}")
    rigid = view.view_rigid if delta_rigid is None else compose(delta_rigid, view.view_rigid)
    return ViewState(scale=view.scale * delta_scale, view_rigid=rigid)
