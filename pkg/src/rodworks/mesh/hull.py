"""3D convex hulls (Qhull behind the solid-mesh contract)."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import DegenerateHull
from .trimesh import TriMesh


def convex_hull(points) -> TriMesh:
    """Closed convex solid over the input points.

    Raises DegenerateHull for <4 points or coplanar/collinear input.
    Facets are reoriented outward (Qhull's simplex winding is arbitrary).
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 4:
        raise DegenerateHull(f"need at least 4 points, got {len(pts)}")
    # joggling would hide coplanar/collinear input, so rank-check first
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[2] <= max(1e-12, 1e-9 * sv[0]):
        raise DegenerateHull("input points are (near) coplanar or collinear")
    try:
        # QJ (deterministic joggle) keeps every facet exactly planar through
        # its own vertices; merged facets would otherwise be planar only to
        # Qhull's internal tolerance, which breaks downstream booleans.
        hull = ConvexHull(pts, qhull_options="QJ")
    except QhullError as exc:
        raise DegenerateHull(str(exc)) from exc
    used = hull.vertices  # indices into pts
    remap = np.full(len(pts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    faces = remap[hull.simplices].astype(np.int32)
    verts = pts[used]
    # orient each simplex along Qhull's outward facet normal
    tri = verts[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    outward = hull.equations[:, :3]
    flip = np.einsum("mi,mi->m", n, outward) < 0
    faces[flip] = faces[flip][:, ::-1]
    return TriMesh(verts, faces)
