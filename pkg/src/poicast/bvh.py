"""Axis-aligned bounding-volume hierarchy for exact point-to-mesh distance.

Built once per mesh over the triangle soup; median splits along the widest
centroid axis keep the tree balanced, so traversal stacks stay small. Leaves
run the exact closest-point-on-triangle test (Ericson, Real-Time Collision
Detection), so queries return true minimum distances, pruned by node AABBs.

All kernels are numba-compiled and reentrant; concurrent read-only queries
against one built tree are safe.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

LEAF_SIZE = 8
_STACK = 512


@njit(cache=True)
def _closest_point_sqdist(ax, ay, az, bx, by, bz, cx, cy, cz, px, py, pz):
    """Squared distance from point p to triangle abc (Ericson's algorithm)."""
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az

    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz

    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz

    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        denom = d1 - d3
        v = d1 / denom if denom != 0.0 else 0.0
        qx = ax + v * abx - px
        qy = ay + v * aby - py
        qz = az + v * abz - pz
        return qx * qx + qy * qy + qz * qz

    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz

    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        denom = d2 - d6
        w = d2 / denom if denom != 0.0 else 0.0
        qx = ax + w * acx - px
        qy = ay + w * acy - py
        qz = az + w * acz - pz
        return qx * qx + qy * qy + qz * qz

    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        denom = (d4 - d3) + (d5 - d6)
        w = (d4 - d3) / denom if denom != 0.0 else 0.0
        qx = bx + w * (cx - bx) - px
        qy = by + w * (cy - by) - py
        qz = bz + w * (cz - bz) - pz
        return qx * qx + qy * qy + qz * qz

    denom = va + vb + vc
    if denom != 0.0:
        v = vb / denom
        w = vc / denom
    else:
        v = 0.0
        w = 0.0
    qx = ax + abx * v + acx * w - px
    qy = ay + aby * v + acy * w - py
    qz = az + abz * v + acz * w - pz
    return qx * qx + qy * qy + qz * qz


@njit(cache=True)
def _box_sqdist(bmin, bmax, px, py, pz):
    d = 0.0
    if px < bmin[0]:
        d += (bmin[0] - px) ** 2
    elif px > bmax[0]:
        d += (px - bmax[0]) ** 2
    if py < bmin[1]:
        d += (bmin[1] - py) ** 2
    elif py > bmax[1]:
        d += (py - bmax[1]) ** 2
    if pz < bmin[2]:
        d += (bmin[2] - pz) ** 2
    elif pz > bmax[2]:
        d += (pz - bmax[2]) ** 2
    return d


@njit(cache=True)
def _build(tmin, tmax, centroids):
    n = tmin.shape[0]
    max_nodes = 2 * n
    bmin = np.empty((max_nodes, 3))
    bmax = np.empty((max_nodes, 3))
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    start = np.zeros(max_nodes, dtype=np.int64)
    count = np.zeros(max_nodes, dtype=np.int64)
    perm = np.arange(n)

    # stack rows: (node index, range lo, range hi)
    stack = np.empty((max_nodes, 3), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        lo = stack[top, 1]
        hi = stack[top, 2]

        for k in range(3):
            lo_v = np.inf
            hi_v = -np.inf
            for i in range(lo, hi):
                t = perm[i]
                if tmin[t, k] < lo_v:
                    lo_v = tmin[t, k]
                if tmax[t, k] > hi_v:
                    hi_v = tmax[t, k]
            bmin[node, k] = lo_v
            bmax[node, k] = hi_v

        m = hi - lo
        if m <= LEAF_SIZE:
            start[node] = lo
            count[node] = m
            continue

        # widest centroid axis, median split for a balanced tree
        axis = 0
        best_ext = -1.0
        for k in range(3):
            cmin = np.inf
            cmax = -np.inf
            for i in range(lo, hi):
                c = centroids[perm[i], k]
                if c < cmin:
                    cmin = c
                if c > cmax:
                    cmax = c
            ext = cmax - cmin
            if ext > best_ext:
                best_ext = ext
                axis = k
        vals = np.empty(m)
        for i in range(m):
            vals[i] = centroids[perm[lo + i], axis]
        order = np.argsort(vals, kind="mergesort")
        tmp = np.empty(m, dtype=np.int64)
        for i in range(m):
            tmp[i] = perm[lo + order[i]]
        for i in range(m):
            perm[lo + i] = tmp[i]
        mid = lo + m // 2

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        stack[top, 0] = lc
        stack[top, 1] = lo
        stack[top, 2] = mid
        top += 1
        stack[top, 0] = rc
        stack[top, 1] = mid
        stack[top, 2] = hi
        top += 1

    return bmin[:n_nodes], bmax[:n_nodes], left[:n_nodes], right[:n_nodes], start[:n_nodes], count[:n_nodes], perm


@njit(cache=True)
def _query_one(tv, bmin, bmax, left, right, start, count, perm, px, py, pz):
    best = np.inf
    stack = np.empty(_STACK, dtype=np.int64)
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if _box_sqdist(bmin[node], bmax[node], px, py, pz) >= best:
            continue
        lc = left[node]
        if lc == -1:
            s = start[node]
            for i in range(s, s + count[node]):
                t = perm[i]
                d = _closest_point_sqdist(
                    tv[t, 0, 0], tv[t, 0, 1], tv[t, 0, 2],
                    tv[t, 1, 0], tv[t, 1, 1], tv[t, 1, 2],
                    tv[t, 2, 0], tv[t, 2, 1], tv[t, 2, 2],
                    px, py, pz,
                )
                if d < best:
                    best = d
        else:
            rc = right[node]
            dl = _box_sqdist(bmin[lc], bmax[lc], px, py, pz)
            dr = _box_sqdist(bmin[rc], bmax[rc], px, py, pz)
            # push the farther child first so the nearer is explored next
            if dl <= dr:
                if dr < best:
                    stack[top] = rc
                    top += 1
                if dl < best:
                    stack[top] = lc
                    top += 1
            else:
                if dl < best:
                    stack[top] = lc
                    top += 1
                if dr < best:
                    stack[top] = rc
                    top += 1
    return best


@njit(cache=True, parallel=True)
def _query_batch(tv, bmin, bmax, left, right, start, count, perm, pts):
    n = pts.shape[0]
    out = np.empty(n)
    for i in prange(n):
        out[i] = np.sqrt(
            _query_one(
                tv, bmin, bmax, left, right, start, count, perm,
                pts[i, 0], pts[i, 1], pts[i, 2],
            )
        )
    return out


class TriangleBVH:
    """Spatial index over a triangle soup for batch minimum-distance queries."""

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray):
        if len(triangles) == 0:
            raise ValueError("cannot index an empty triangle list")
        tv = np.ascontiguousarray(vertices[triangles], dtype=np.float64)
        self._tv = tv
        tmin = tv.min(axis=1)
        tmax = tv.max(axis=1)
        centroids = tv.mean(axis=1)
        self._nodes = _build(tmin, tmax, centroids)

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Exact minimum distance from each query point to the mesh surface."""
        pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
        bmin, bmax, left, right, start, count, perm = self._nodes
        return _query_batch(self._tv, bmin, bmax, left, right, start, count, perm, pts)

    def distance(self, point) -> float:
        return float(self.distances(np.asarray(point, dtype=np.float64).reshape(1, 3))[0])
