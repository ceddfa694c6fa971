"""Exact nearest-neighbor engine over 3D point clouds.

A static k-d tree built once per point set: median split (quickselect) on the
widest-spread axis, leaf size 32, tight per-node bounding boxes. Queries are
exact -- pruning compares squared rectangle distances strictly, so any
equal-distance candidate is still visited and ties resolve to the lowest
input index. Distances stay squared internally and are square-rooted only at
the API boundary.

The batch query kernel parallelizes over queries; every query writes only
its own slot, so results are independent of thread count. Structured scan
clouds (dense rings, long grazing ground streaks) are the design workload:
tight boxes prune them far better than single-plane splits.

`brute_force_nearest` is the reference implementation the tree is verified
against; it must stay independent of the tree code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .geometry import as_points

DEFAULT_LEAF_SIZE = 32


@njit(cache=True)
def _select(vals, order, s, e, k):
    """Hoare quickselect on order[s:e] keyed by vals[order[i]]: afterwards
    order[k] holds the k-th element and the segment is partitioned around it."""
    lo = s
    hi = e - 1
    while hi > lo:
        mid = (lo + hi) // 2
        a = vals[order[lo]]
        b = vals[order[mid]]
        c = vals[order[hi]]
        # median-of-three pivot guards against presorted scan order
        if a > b:
            a, b = b, a
        if b > c:
            b = c
        if a > b:
            b = a
        pivot = b
        i = lo
        j = hi
        while i <= j:
            while vals[order[i]] < pivot:
                i += 1
            while vals[order[j]] > pivot:
                j -= 1
            if i <= j:
                tmp = order[i]
                order[i] = order[j]
                order[j] = tmp
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            return


@njit(cache=True)
def _build_kernel(pts, leaf_size):
    n = pts.shape[0]
    order = np.arange(n)
    max_nodes = 2 * (n // max(leaf_size // 2, 1) + 2)
    node_lo = np.empty((max_nodes, 3))
    node_hi = np.empty((max_nodes, 3))
    node_left = np.full(max_nodes, -1, dtype=np.int64)
    node_start = np.zeros(max_nodes, dtype=np.int64)
    node_count = np.zeros(max_nodes, dtype=np.int64)
    n_nodes = 0

    stack_node = np.empty(128, dtype=np.int64)
    stack_s = np.empty(128, dtype=np.int64)
    stack_e = np.empty(128, dtype=np.int64)

    # root
    node_start[0] = 0
    node_count[0] = n
    for a in range(3):
        lo = pts[order[0], a]
        hi = lo
        for i in range(1, n):
            v = pts[order[i], a]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
        node_lo[0, a] = lo
        node_hi[0, a] = hi
    n_nodes = 1
    top = 0
    stack_node[0] = 0
    stack_s[0] = 0
    stack_e[0] = n
    top = 1

    while top > 0:
        top -= 1
        nd = stack_node[top]
        s = stack_s[top]
        e = stack_e[top]
        cnt = e - s
        if cnt <= leaf_size:
            continue
        # widest axis of this node's box
        ax = 0
        spread = node_hi[nd, 0] - node_lo[nd, 0]
        for a in range(1, 3):
            sp = node_hi[nd, a] - node_lo[nd, a]
            if sp > spread:
                spread = sp
                ax = a
        if spread <= 0.0:
            continue  # coincident points stay a leaf
        k = s + cnt // 2
        _select(pts[:, ax], order, s, e, k)
        left = n_nodes
        n_nodes += 2
        for child, cs, ce in ((left, s, k), (left + 1, k, e)):
            node_start[child] = cs
            node_count[child] = ce - cs
            for a in range(3):
                lo = pts[order[cs], a]
                hi = lo
                for i in range(cs + 1, ce):
                    v = pts[order[i], a]
                    if v < lo:
                        lo = v
                    elif v > hi:
                        hi = v
                node_lo[child, a] = lo
                node_hi[child, a] = hi
        node_left[nd] = left
        node_count[nd] = 0
        stack_node[top] = left
        stack_s[top] = s
        stack_e[top] = k
        stack_node[top + 1] = left + 1
        stack_s[top + 1] = k
        stack_e[top + 1] = e
        top += 2

    return (
        node_lo[:n_nodes].copy(),
        node_hi[:n_nodes].copy(),
        node_left[:n_nodes].copy(),
        node_start[:n_nodes].copy(),
        node_count[:n_nodes].copy(),
        order,
    )


@njit(cache=True, inline="always")
def _rect_d2(node_lo, node_hi, nd, qx, qy, qz):
    d2 = 0.0
    for a in range(3):
        q = qx if a == 0 else (qy if a == 1 else qz)
        lo = node_lo[nd, a]
        hi = node_hi[nd, a]
        if q < lo:
            d = lo - q
            d2 += d * d
        elif q > hi:
            d = q - hi
            d2 += d * d
    return d2


@njit(cache=True, parallel=True)
def _query_kernel(
    node_lo, node_hi, node_left, node_start, node_count, pts_r, orig, qs, out_d2, out_idx
):
    nq = qs.shape[0]
    for i in prange(nq):
        qx = qs[i, 0]
        qy = qs[i, 1]
        qz = qs[i, 2]
        best = np.inf
        best_idx = np.int64(-1)
        stack = np.empty(128, dtype=np.int64)
        dist = np.empty(128, dtype=np.float64)
        stack[0] = 0
        dist[0] = _rect_d2(node_lo, node_hi, 0, qx, qy, qz)
        top = 1
        while top > 0:
            top -= 1
            nd = stack[top]
            if dist[top] > best:  # strict: equal-distance boxes may hide tie winners
                continue
            left = node_left[nd]
            if left >= 0:
                dl = _rect_d2(node_lo, node_hi, left, qx, qy, qz)
                dr = _rect_d2(node_lo, node_hi, left + 1, qx, qy, qz)
                if dl <= dr:  # push far child first so the near one pops next
                    if dr <= best:
                        stack[top] = left + 1
                        dist[top] = dr
                        top += 1
                    if dl <= best:
                        stack[top] = left
                        dist[top] = dl
                        top += 1
                else:
                    if dl <= best:
                        stack[top] = left
                        dist[top] = dl
                        top += 1
                    if dr <= best:
                        stack[top] = left + 1
                        dist[top] = dr
                        top += 1
                continue
            s = node_start[nd]
            for k in range(s, s + node_count[nd]):
                dx = pts_r[k, 0] - qx
                dy = pts_r[k, 1] - qy
                dz = pts_r[k, 2] - qz
                d2 = dx * dx + dy * dy + dz * dz
                oi = orig[k]
                if d2 < best or (d2 == best and oi < best_idx):
                    best = d2
                    best_idx = oi
        out_d2[i] = best
        out_idx[i] = best_idx


@dataclass(frozen=True)
class NnResult:
    """Distance to, and input index of, the nearest indexed point.
    ``index`` is -1 (and distance +inf) only for queries against an empty index."""

    distance: float
    index: int


class KdTree:
    """Immutable index over the exact input points. Queries are read-only and
    safe from any number of threads."""

    def __init__(self, points, leaf_size: int = DEFAULT_LEAF_SIZE):
        pts = as_points(points)
        self.points = pts
        self.points.setflags(write=False)
        self.leaf_size = int(leaf_size)
        if pts.shape[0] > 0:
            (self._lo, self._hi, self._left, self._start, self._count, self._order
             ) = _build_kernel(pts, self.leaf_size)
            self._pts_r = np.ascontiguousarray(pts[self._order])
        else:
            self._order = None

    def __len__(self) -> int:
        return self.points.shape[0]


def build(points, leaf_size: int = DEFAULT_LEAF_SIZE) -> KdTree:
    """Index a point set; empty input yields a tree that answers +inf."""
    return KdTree(points, leaf_size)


def nearest_batch(tree: KdTree, queries) -> tuple[np.ndarray, np.ndarray]:
    """Exact nearest distance and index per query, in query order.

    Ties on exact distance resolve to the lowest input index. Returns
    (distances, indices) arrays; misses against an empty index are
    (+inf, -1).
    """
    qs = as_points(queries)
    n = qs.shape[0]
    if n == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if tree._order is None:
        return np.full(n, np.inf), np.full(n, -1, dtype=np.int64)
    out_d2 = np.empty(n)
    out_idx = np.empty(n, dtype=np.int64)
    _query_kernel(
        tree._lo, tree._hi, tree._left, tree._start, tree._count,
        tree._pts_r, tree._order, np.ascontiguousarray(qs), out_d2, out_idx,
    )
    return np.sqrt(out_d2), out_idx


def query_distances(tree: KdTree, queries) -> np.ndarray:
    """Exact nearest distances only; same kernel, index output discarded."""
    return nearest_batch(tree, queries)[0]


def nearest(tree: KdTree, q) -> NnResult:
    """Single-query form of `nearest_batch`."""
    d, i = nearest_batch(tree, np.asarray(q, dtype=np.float64).reshape(1, 3))
    return NnResult(float(d[0]), int(i[0]))


def brute_force_nearest(points, queries) -> tuple[np.ndarray, np.ndarray]:
    """Reference scan: exact minimum over all pairs, lowest index on ties.

    Chunked so memory stays bounded at large sizes.
    """
    pts = as_points(points)
    qs = as_points(queries)
    n = qs.shape[0]
    if n == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if pts.shape[0] == 0:
        return np.full(n, np.inf), np.full(n, -1, dtype=np.int64)
    out_d = np.empty(n)
    out_i = np.empty(n, dtype=np.int64)
    chunk = max(1, int(2e6 // max(1, pts.shape[0])))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        diff = qs[lo:hi, None, :] - pts[None, :, :]
        d2 = np.einsum("qpk,qpk->qp", diff, diff)
        best = np.argmin(d2, axis=1)  # argmin returns the first (lowest) index
        rows = np.arange(hi - lo)
        out_d[lo:hi] = np.sqrt(d2[rows, best])
        out_i[lo:hi] = best
    return out_d, out_i
