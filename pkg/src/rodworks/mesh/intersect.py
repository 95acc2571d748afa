"""Mesh-mesh intersection queries: AABB broad phase + SAT narrow phase."""

from __future__ import annotations

import numpy as np

from .. import _kernels as kernels
from .trimesh import TriMesh, require_solid


def box_candidate_pairs(a: TriMesh, b: TriMesh, inflate: float = 0.0) -> np.ndarray:
    """(k,2) face pairs whose AABBs (inflated) overlap."""
    ta = a.triangles()
    tb = b.triangles()
    amin = ta.min(axis=1) - inflate
    amax = ta.max(axis=1) + inflate
    bmin = tb.min(axis=1)
    bmax = tb.max(axis=1)
    out = []
    chunk = max(1, int(4e6 // max(len(tb), 1)))
    for lo in range(0, len(ta), chunk):
        hi = lo + chunk
        overlap = (
            (amin[lo:hi, None, :] <= bmax[None, :, :])
            & (amax[lo:hi, None, :] >= bmin[None, :, :])
        ).all(axis=2)
        ia, ib = np.nonzero(overlap)
        if len(ia):
            out.append(np.column_stack([ia + lo, ib]))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.vstack(out)


def intersect_meshes(a: TriMesh, b: TriMesh) -> bool:
    """True iff the solids' surfaces intersect or one contains the other."""
    require_solid(a, "intersect_meshes A")
    require_solid(b, "intersect_meshes B")
    if a.is_empty() or b.is_empty():
        return False
    alo, ahi = a.bounds()
    blo, bhi = b.bounds()
    if (ahi < blo).any() or (bhi < alo).any():
        return False
    pairs = box_candidate_pairs(a, b)
    if len(pairs):
        hits = kernels.tri_pairs_intersect(a.vertices, a.faces, b.vertices, b.faces, pairs)
        if hits.any():
            return True
    # no surface crossing: containment check both ways
    if points_inside(b, a.vertices[:1])[0]:
        return True
    if points_inside(a, b.vertices[:1])[0]:
        return True
    return False


def points_inside(mesh: TriMesh, points) -> np.ndarray:
    """Winding-number containment test for a batch of points."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    w = kernels.winding_numbers(mesh.vertices, mesh.faces, pts)
    return w > 0.5


def self_intersects(mesh: TriMesh) -> bool:
    """True if any two faces that share no vertex intersect."""
    pairs = box_candidate_pairs(mesh, mesh)
    pairs = pairs[pairs[:, 0] < pairs[:, 1]]
    if not len(pairs):
        return False
    fa = mesh.faces[pairs[:, 0]]
    fb = mesh.faces[pairs[:, 1]]
    shares = (fa[:, :, None] == fb[:, None, :]).any(axis=(1, 2))
    pairs = pairs[~shares]
    if not len(pairs):
        return False
    hits = kernels.tri_pairs_intersect(
        mesh.vertices, mesh.faces, mesh.vertices, mesh.faces, pairs
    )
    return bool(hits.any())
