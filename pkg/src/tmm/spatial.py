"""Ray casting against snapshot layers.

A LayerIndex flattens all triangles of one layer (anchor pose pre-applied)
and answers nearest-intersection queries through an axis-aligned BVH. A
brute-force scan over the same flattened arrays is provided as the testing
oracle; both sides share one vectorized intersection routine so matching
triangles produce bitwise-identical distances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TmmError
from .meshcore import Snapshot, Timestamp

LIVE = "LIVE"

_DET_EPS = 1e-12      # parallel / zero-area cutoff on the determinant
_EDGE_EPS = 1e-12     # inclusive margin so shared-edge rays cannot leak
_MIN_T = 1e-9         # discard self-hits when re-casting from a surface
_TIE_EPS = 1e-12      # distances closer than this are tied


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        n = np.linalg.norm(d)
        if abs(n - 1.0) > 1e-9:
            raise TmmError(f"ray direction must be unit length, |d| = {n}")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)

    @staticmethod
    def through(origin, target) -> "Ray":
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(target, dtype=np.float64) - o
        return Ray(o, d / np.linalg.norm(d))


@dataclass(frozen=True)
class Hit:
    point: np.ndarray
    ray_distance: float
    layer_id: str
    timestamp: Timestamp | None
    mesh_index: int
    triangle_index: int


def _intersect_many(v0, e1, e2, origin, direction):
    """Moller-Trumbore over triangle arrays; returns t per triangle, inf on miss.

    Zero-area triangles have a zero determinant and fall out naturally.
    """
    pvec = np.cross(direction[None, :], e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = 1.0 / det
        tvec = origin[None, :] - v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
        qvec = np.cross(tvec, e1)
        v = (qvec @ direction) * inv_det
        t = np.einsum("ij,ij->i", e2, qvec) * inv_det
        ok = (
            (np.abs(det) > _DET_EPS)
            & (u >= -_EDGE_EPS)
            & (v >= -_EDGE_EPS)
            & (u + v <= 1.0 + _EDGE_EPS)
            & (t > _MIN_T)
        )
    return np.where(ok, t, np.inf)


def _select_best(t: np.ndarray, prim_ids: np.ndarray):
    """Nearest hit; ties within _TIE_EPS resolved to the lowest primitive id."""
    finite = np.isfinite(t)
    if not finite.any():
        return None
    tmin = t[finite].min()
    tied = finite & (t <= tmin + _TIE_EPS)
    ids = prim_ids[tied]
    k = int(ids.argmin())
    return float(t[tied][k]), int(ids[k])


class LayerIndex:
    """Immutable triangle index for one layer, in world coordinates.

    The BVH is built lazily on first query; the build is deterministic for a
    given input, so results never depend on construction timing.
    """

    _LEAF_SIZE = 16

    def __init__(self, meshes, layer_id: str = LIVE, timestamp: Timestamp | None = None):
        self.layer_id = layer_id
        self.timestamp = timestamp
        v0, e1, e2, mesh_idx, tri_idx = [], [], [], [], []
        for mi, mesh in enumerate(meshes):
            if len(mesh.triangles) == 0:
                continue
            tri = mesh.vertices[mesh.triangles]  # (T, 3, 3)
            v0.append(tri[:, 0])
            e1.append(tri[:, 1] - tri[:, 0])
            e2.append(tri[:, 2] - tri[:, 0])
            mesh_idx.append(np.full(len(tri), mi, dtype=np.int64))
            tri_idx.append(np.arange(len(tri), dtype=np.int64))
        if v0:
            self.v0 = np.concatenate(v0)
            self.e1 = np.concatenate(e1)
            self.e2 = np.concatenate(e2)
            self.mesh_index = np.concatenate(mesh_idx)
            self.tri_index = np.concatenate(tri_idx)
        else:
            self.v0 = np.zeros((0, 3))
            self.e1 = np.zeros((0, 3))
            self.e2 = np.zeros((0, 3))
            self.mesh_index = np.zeros(0, dtype=np.int64)
            self.tri_index = np.zeros(0, dtype=np.int64)
        self._bvh = None

    @property
    def triangle_count(self) -> int:
        return len(self.v0)

    # -- BVH construction ---------------------------------------------------

    def _ensure_bvh(self):
        if self._bvh is not None or self.triangle_count == 0:
            return
        # triangle AABBs: corners are v0, v0+e1, v0+e2
        lo = np.minimum(self.v0, np.minimum(self.v0 + self.e1, self.v0 + self.e2))
        hi = np.maximum(self.v0, np.maximum(self.v0 + self.e1, self.v0 + self.e2))
        centroids = 0.5 * (lo + hi)

        order = np.arange(self.triangle_count)
        nodes = []  # [min(3), max(3), left, right, start, count]

        def build(start, end):
            node_id = len(nodes)
            seg = order[start:end]
            nmin = lo[seg].min(axis=0)
            nmax = hi[seg].max(axis=0)
            nodes.append([nmin, nmax, -1, -1, start, end - start])
            count = end - start
            if count <= self._LEAF_SIZE:
                return node_id
            cmin = centroids[seg].min(axis=0)
            cmax = centroids[seg].max(axis=0)
            axis = int(np.argmax(cmax - cmin))
            if cmax[axis] - cmin[axis] <= 0.0:
                return node_id  # all centroids identical: keep as leaf
            local = np.argsort(centroids[seg, axis], kind="stable")
            order[start:end] = seg[local]
            mid = start + count // 2
            nodes[node_id][2] = build(start, mid)
            nodes[node_id][3] = build(mid, end)
            nodes[node_id][5] = 0  # inner node
            return node_id

        import sys

        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 10_000))
        try:
            build(0, self.triangle_count)
        finally:
            sys.setrecursionlimit(limit)

        self._bvh = (
            np.array([n[0] for n in nodes]),
            np.array([n[1] for n in nodes]),
            np.array([n[2] for n in nodes], dtype=np.int64),
            np.array([n[3] for n in nodes], dtype=np.int64),
            np.array([n[4] for n in nodes], dtype=np.int64),
            np.array([n[5] for n in nodes], dtype=np.int64),
            order,
        )

    # -- queries --------------------------------------------------------------

    def query(self, origin, direction):
        """Nearest intersection via the BVH: (t, flat primitive id) or None."""
        if self.triangle_count == 0:
            return None
        self._ensure_bvh()
        bmin, bmax, left, right, start, count, order = self._bvh
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(direction, dtype=np.float64)
        with np.errstate(divide="ignore"):
            inv = 1.0 / d

        best_t = np.inf
        cand_t = []
        cand_id = []
        stack = [0]
        while stack:
            node = stack.pop()
            # slab test (degenerate axes handled by the +/-inf arithmetic)
            with np.errstate(invalid="ignore"):
                t1 = (bmin[node] - o) * inv
                t2 = (bmax[node] - o) * inv
            swap = t1 > t2
            tnear = np.where(swap, t2, t1)
            tfar = np.where(swap, t1, t2)
            par = d == 0.0
            if np.any(par):
                outside = par & ((o < bmin[node]) | (o > bmax[node]))
                if outside.any():
                    continue
                tnear = np.where(par, -np.inf, tnear)
                tfar = np.where(par, np.inf, tfar)
            enter = max(tnear.max(), 0.0)
            exit_ = tfar.min()
            if enter > exit_ or enter > best_t + _TIE_EPS:
                continue
            if count[node] > 0:  # leaf
                seg = order[start[node] : start[node] + count[node]]
                t = _intersect_many(self.v0[seg], self.e1[seg], self.e2[seg], o, d)
                ok = t <= best_t + _TIE_EPS
                if ok.any():
                    cand_t.append(t[ok])
                    cand_id.append(seg[ok])
                    best_t = min(best_t, t[ok].min())
            else:
                stack.append(int(right[node]))
                stack.append(int(left[node]))
        if not cand_t:
            return None
        return _select_best(np.concatenate(cand_t), np.concatenate(cand_id))

    def query_brute_force(self, origin, direction):
        """Linear scan over every triangle; the oracle the BVH must match."""
        if self.triangle_count == 0:
            return None
        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(direction, dtype=np.float64)
        t = _intersect_many(self.v0, self.e1, self.e2, o, d)
        return _select_best(t, np.arange(self.triangle_count))

    def _hit(self, ray: Ray, t: float, prim: int) -> Hit:
        return Hit(
            point=ray.origin + t * ray.direction,
            ray_distance=t,
            layer_id=self.layer_id,
            timestamp=self.timestamp,
            mesh_index=int(self.mesh_index[prim]),
            triangle_index=int(self.tri_index[prim]),
        )


def build_index(source, layer_id: str = LIVE, timestamp: Timestamp | None = None) -> LayerIndex:
    """Index a Snapshot (anchor pose pre-applied) or a plain mesh list."""
    if isinstance(source, Snapshot):
        lid = layer_id if layer_id != LIVE else (source.id or LIVE)
        return LayerIndex(source.world_meshes(), layer_id=lid, timestamp=source.timestamp)
    return LayerIndex(list(source), layer_id=layer_id, timestamp=timestamp)


def _cast(indexes, ray: Ray, query_name: str) -> Hit | None:
    best = None  # (t, layer ordinal, prim, index)
    for ordinal, index in enumerate(indexes):
        res = getattr(index, query_name)(ray.origin, ray.direction)
        if res is None:
            continue
        t, prim = res
        if best is None or t < best[0] - _TIE_EPS:
            best = (t, ordinal, prim, index)
        # tie within _TIE_EPS: earlier layer ordinal wins (keep current best)
    if best is None:
        return None
    t, _, prim, index = best
    return index._hit(ray, t, prim)


def ray_cast(indexes, ray: Ray) -> Hit | None:
    """Closest hit across layers; ties go to the lowest layer ordinal, then
    the lowest (mesh, triangle) ordinal inside a layer."""
    return _cast(indexes, ray, "query")


def ray_cast_brute_force(indexes, ray: Ray) -> Hit | None:
    """Oracle twin of :func:`ray_cast` using exhaustive scans."""
    return _cast(indexes, ray, "query_brute_force")
