"""Flat bounding-volume hierarchy shared by both kernel backends."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 8


@dataclass(frozen=True)
class Bvh:
    """Flattened BVH over triangles, stored as parallel arrays.

    Internal nodes have left/right >= 0; leaves have left == -1 and reference
    tri_order[start:start+count].
    """

    bounds_min: np.ndarray  # (n_nodes, 3) float64
    bounds_max: np.ndarray  # (n_nodes, 3) float64
    left: np.ndarray  # (n_nodes,) int32
    right: np.ndarray  # (n_nodes,) int32
    start: np.ndarray  # (n_nodes,) int32
    count: np.ndarray  # (n_nodes,) int32
    tri_order: np.ndarray  # (n_tris,) int32


def build_bvh(vertices: np.ndarray, faces: np.ndarray) -> Bvh:
    """Median-split BVH along the longest centroid axis; deterministic."""
    n_tris = len(faces)
    tris = vertices[faces]  # (m, 3, 3)
    tri_min = tris.min(axis=1)
    tri_max = tris.max(axis=1)
    centroids = tris.mean(axis=1)

    bounds_min = []
    bounds_max = []
    left = []
    right = []
    start = []
    count = []
    order = np.arange(n_tris, dtype=np.int64)

    # (node_index, lo, hi) ranges into `order`; children patched after pop.
    stack = [(0, n_tris)]
    pending_parent = [-1]  # which child slot of which node, -1 = root
    while stack:
        lo, hi = stack.pop()
        slot = pending_parent.pop()
        idx = order[lo:hi]
        node = len(bounds_min)
        bounds_min.append(tri_min[idx].min(axis=0))
        bounds_max.append(tri_max[idx].max(axis=0))
        if slot >= 0:
            if left[slot] == -2:
                left[slot] = node
            else:
                right[slot] = node
        if hi - lo <= LEAF_SIZE:
            left.append(-1)
            right.append(-1)
            start.append(lo)
            count.append(hi - lo)
            continue
        c = centroids[idx]
        extent = c.max(axis=0) - c.min(axis=0)
        axis = int(np.argmax(extent))
        key = np.argsort(c[:, axis], kind="stable")
        order[lo:hi] = idx[key]
        mid = lo + (hi - lo) // 2
        left.append(-2)  # placeholder: next pushed child fills it
        right.append(-2)
        start.append(lo)
        count.append(hi - lo)
        # push right first so left is popped (and numbered) first
        stack.append((mid, hi))
        pending_parent.append(node)
        stack.append((lo, mid))
        pending_parent.append(node)

    return Bvh(
        bounds_min=np.ascontiguousarray(bounds_min, dtype=np.float64),
        bounds_max=np.ascontiguousarray(bounds_max, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        start=np.asarray(start, dtype=np.int32),
        count=np.asarray(count, dtype=np.int32),
        tri_order=np.ascontiguousarray(order, dtype=np.int32),
    )
