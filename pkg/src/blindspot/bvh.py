"""Bounding-volume hierarchy over triangles and batch ray casting.

The BVH is rebuilt from scratch for every world snapshot (triangle counts
here stay small enough that refitting would buy nothing). Traversal is a
numba kernel parallelized over rays; every ray writes only its own output
slot, so results are independent of thread count.

`brute_force_cast` evaluates the same intersection predicate against every
triangle and is the reference the BVH is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

ENTRY_EPSILON = 1e-6  # m; hits closer than this are self-intersections
_DET_EPS = 1e-12      # ray parallel to triangle plane
_BARY_TOL = 1e-9      # closes cracks along shared edges
_LEAF_SIZE = 8


@dataclass(frozen=True, eq=False)
class Bvh:
    """Flattened BVH. Internal nodes store children at (left, left+1);
    leaves store a [start, start+count) range into the reordered triangle
    arrays. ``order`` maps reordered position -> original triangle index."""

    node_lo: np.ndarray
    node_hi: np.ndarray
    node_left: np.ndarray   # -1 for leaves
    node_start: np.ndarray
    node_count: np.ndarray
    order: np.ndarray
    v0: np.ndarray          # reordered triangle vertex 0
    e1: np.ndarray          # v1 - v0
    e2: np.ndarray          # v2 - v0

    @property
    def n_triangles(self) -> int:
        return self.order.shape[0]


def build_bvh(triangles: np.ndarray) -> Bvh:
    """Build from (T, 3, 3) triangle vertices (may be empty)."""
    tris = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    n = tris.shape[0]
    if n == 0:
        z3 = np.zeros((0, 3))
        zi = np.zeros(0, dtype=np.int64)
        return Bvh(z3, z3, zi, zi, zi, zi, z3, z3, z3)

    tri_lo = tris.min(axis=1)
    tri_hi = tris.max(axis=1)
    centroids = 0.5 * (tri_lo + tri_hi)
    order = np.arange(n, dtype=np.int64)

    node_lo: list[np.ndarray] = []
    node_hi: list[np.ndarray] = []
    node_left: list[int] = []
    node_start: list[int] = []
    node_count: list[int] = []

    # Iterative median-split build; stack items are (node_index, start, end).
    def new_node(start: int, end: int) -> int:
        idx = order[start:end]
        node_lo.append(tri_lo[idx].min(axis=0))
        node_hi.append(tri_hi[idx].max(axis=0))
        node_left.append(-1)
        node_start.append(start)
        node_count.append(end - start)
        return len(node_lo) - 1

    stack = [(new_node(0, n), 0, n)]
    while stack:
        node, start, end = stack.pop()
        count = end - start
        if count <= _LEAF_SIZE:
            continue
        idx = order[start:end]
        cent = centroids[idx]
        spread = cent.max(axis=0) - cent.min(axis=0)
        axis = int(np.argmax(spread))
        if spread[axis] <= 0.0:
            continue  # all centroids coincide; keep as leaf
        half = count // 2
        part = np.argpartition(cent[:, axis], half)
        order[start:end] = idx[part]
        mid = start + half
        left = new_node(start, mid)
        right = new_node(mid, end)
        assert right == left + 1
        node_left[node] = left
        node_count[node] = 0
        stack.append((left, start, mid))
        stack.append((right, mid, end))

    v = tris[order]
    return Bvh(
        node_lo=np.ascontiguousarray(node_lo, dtype=np.float64),
        node_hi=np.ascontiguousarray(node_hi, dtype=np.float64),
        node_left=np.asarray(node_left, dtype=np.int64),
        node_start=np.asarray(node_start, dtype=np.int64),
        node_count=np.asarray(node_count, dtype=np.int64),
        order=order,
        v0=np.ascontiguousarray(v[:, 0]),
        e1=np.ascontiguousarray(v[:, 1] - v[:, 0]),
        e2=np.ascontiguousarray(v[:, 2] - v[:, 0]),
    )


@njit(cache=True, error_model="numpy")
def _box_entry(lo, hi, ox, oy, oz, dx, dy, dz, t_best):
    """Entry parameter of ray into box, or -1.0 on miss within [0, t_best]."""
    tmin = 0.0
    tmax = t_best
    for axis in range(3):
        if axis == 0:
            o, d, lo_a, hi_a = ox, dx, lo[0], hi[0]
        elif axis == 1:
            o, d, lo_a, hi_a = oy, dy, lo[1], hi[1]
        else:
            o, d, lo_a, hi_a = oz, dz, lo[2], hi[2]
        if d > 1e-300 or d < -1e-300:
            inv = 1.0 / d
            t0 = (lo_a - o) * inv
            t1 = (hi_a - o) * inv
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > tmin:
                tmin = t0
            if t1 < tmax:
                tmax = t1
            if tmin > tmax:
                return -1.0
        else:
            if o < lo_a or o > hi_a:
                return -1.0
    return tmin


@njit(cache=True, error_model="numpy")
def _traverse_one(
    node_lo, node_hi, node_left, node_start, node_count,
    v0, e1, e2, ox, oy, oz, dx, dy, dz, t_max,
):
    best_t = t_max
    best_tri = -1
    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        entry = _box_entry(node_lo[node], node_hi[node], ox, oy, oz, dx, dy, dz, best_t)
        if entry < 0.0:
            continue
        left = node_left[node]
        if left >= 0:
            # Descend the nearer child first so the far one can be pruned.
            e_l = _box_entry(node_lo[left], node_hi[left], ox, oy, oz, dx, dy, dz, best_t)
            e_r = _box_entry(node_lo[left + 1], node_hi[left + 1], ox, oy, oz, dx, dy, dz, best_t)
            if e_l >= 0.0 and e_r >= 0.0:
                if e_l <= e_r:
                    stack[top] = left + 1
                    stack[top + 1] = left
                else:
                    stack[top] = left
                    stack[top + 1] = left + 1
                top += 2
            elif e_l >= 0.0:
                stack[top] = left
                top += 1
            elif e_r >= 0.0:
                stack[top] = left + 1
                top += 1
            continue
        start = node_start[node]
        for k in range(start, start + node_count[node]):
            # Moller-Trumbore with a small barycentric tolerance.
            e1x, e1y, e1z = e1[k, 0], e1[k, 1], e1[k, 2]
            e2x, e2y, e2z = e2[k, 0], e2[k, 1], e2[k, 2]
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if -_DET_EPS < det < _DET_EPS:
                continue
            inv_det = 1.0 / det
            tx = ox - v0[k, 0]
            ty = oy - v0[k, 1]
            tz = oz - v0[k, 2]
            u = (tx * px + ty * py + tz * pz) * inv_det
            if u < -_BARY_TOL or u > 1.0 + _BARY_TOL:
                continue
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv_det
            if v < -_BARY_TOL or u + v > 1.0 + _BARY_TOL:
                continue
            t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
            # t == best_t with no hit yet accepts a hit at exactly max range.
            if t > ENTRY_EPSILON and (t < best_t or (t == best_t and best_tri == -1)):
                best_t = t
                best_tri = k
    return best_t, best_tri


@njit(cache=True, parallel=True, error_model="numpy")
def _cast_kernel(
    node_lo, node_hi, node_left, node_start, node_count,
    v0, e1, e2, origins, dirs, t_max, out_t, out_tri,
):
    n = dirs.shape[0]
    for i in prange(n):
        t, tri = _traverse_one(
            node_lo, node_hi, node_left, node_start, node_count,
            v0, e1, e2,
            origins[i, 0], origins[i, 1], origins[i, 2],
            dirs[i, 0], dirs[i, 1], dirs[i, 2],
            t_max[i],
        )
        out_t[i] = t
        out_tri[i] = tri


def cast_rays(
    bvh: Bvh, origins: np.ndarray, dirs: np.ndarray, t_max: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest hit per ray. Returns (distances, triangle indices); misses are
    marked with index -1 and distance equal to the ray's t_max.

    ``origins`` may be a single (3,) origin shared by all rays.
    """
    dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    n = dirs.shape[0]
    origins = np.asarray(origins, dtype=np.float64)
    if origins.ndim == 1:
        origins = np.broadcast_to(origins, (n, 3))
    origins = np.ascontiguousarray(origins)
    t_max = np.broadcast_to(np.asarray(t_max, dtype=np.float64), (n,))
    t_max = np.ascontiguousarray(t_max)

    out_t = np.empty(n, dtype=np.float64)
    out_tri = np.full(n, -1, dtype=np.int64)
    if bvh.n_triangles == 0 or n == 0:
        out_t[:] = t_max
        return out_t, out_tri
    _cast_kernel(
        bvh.node_lo, bvh.node_hi, bvh.node_left, bvh.node_start, bvh.node_count,
        bvh.v0, bvh.e1, bvh.e2, origins, dirs, t_max, out_t, out_tri,
    )
    hit = out_tri >= 0
    out_tri[hit] = bvh.order[out_tri[hit]]
    return out_t, out_tri


def brute_force_cast(
    triangles: np.ndarray, origins: np.ndarray, dirs: np.ndarray, t_max
) -> tuple[np.ndarray, np.ndarray]:
    """Reference caster: test every ray against every triangle.

    Same predicate and tolerances as the BVH kernel; ties on exact distance
    go to the lowest triangle index.
    """
    tris = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    n = dirs.shape[0]
    origins = np.asarray(origins, dtype=np.float64)
    if origins.ndim == 1:
        origins = np.broadcast_to(origins, (n, 3))
    t_max = np.broadcast_to(np.asarray(t_max, dtype=np.float64), (n,))

    out_t = np.array(t_max, copy=True)
    out_tri = np.full(n, -1, dtype=np.int64)
    if tris.shape[0] == 0 or n == 0:
        return out_t, out_tri

    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    chunk = max(1, int(2e6 // max(1, tris.shape[0])))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        o = origins[lo:hi, None, :]
        d = dirs[lo:hi, None, :]
        p = np.cross(d, e2[None, :, :])
        det = np.einsum("rtk,rtk->rt", np.broadcast_to(e1, p.shape), p)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_det = 1.0 / det
            tvec = o - v0[None, :, :]
            u = np.einsum("rtk,rtk->rt", tvec, p) * inv_det
            q = np.cross(tvec, e1[None, :, :])
            v = np.einsum("rtk,rtk->rt", np.broadcast_to(d, q.shape), q) * inv_det
            t = np.einsum("rtk,rtk->rt", np.broadcast_to(e2, q.shape), q) * inv_det
        ok = (
            (np.abs(det) >= _DET_EPS)
            & (u >= -_BARY_TOL) & (u <= 1.0 + _BARY_TOL)
            & (v >= -_BARY_TOL) & (u + v <= 1.0 + _BARY_TOL)
            & (t > ENTRY_EPSILON) & (t <= out_t[lo:hi, None])
        )
        t = np.where(ok, t, np.inf)
        best = np.argmin(t, axis=1)
        rows = np.arange(hi - lo)
        best_t = t[rows, best]
        hit = np.isfinite(best_t)
        out_t[lo:hi][hit] = best_t[hit]
        out_tri[lo:hi][hit] = best[hit]
    return out_t, out_tri
