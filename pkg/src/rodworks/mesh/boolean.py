"""Solid booleans (union, difference) on watertight triangle meshes.

Pipeline: snap-round both meshes onto one tolerance grid, split each
triangle along its intersection with the other mesh (2D noding via GEOS in
the triangle's plane), classify every fragment against the other solid via
closest-point signed distance with angle-weighted pseudo-normals, then keep
or flip fragments per the boolean rules.  Coplanar contacts are resolved by
the ON-surface classification; residual T-junctions are repaired from the
global vertex pool.  A post-hoc solidity check raises BooleanFailure
instead of returning a broken mesh, letting callers retry with jittered
inputs.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np
from scipy.spatial import cKDTree
from shapely.geometry import LineString, Polygon
from shapely.geometry.polygon import orient as shapely_orient
from shapely.ops import polygonize, unary_union

from .. import _kernels as kernels
from ..errors import BooleanFailure
from .trimesh import (
    TriMesh,
    canonical_form,
    empty_mesh,
    face_normals,
    signed_volume,
    solid_problems,
    weld,
)

EMPTY_VOLUME = 1e-9  # mm³; boolean results below this count as empty

OUT, IN, ON_SAME, ON_OPP = 0, 1, 2, 3


def boolean(op: str, a: TriMesh, b: TriMesh) -> TriMesh:
    """Solid union or difference of two watertight meshes.

    op is "union" or "difference".  Output passes the solidity check or
    BooleanFailure is raised.  If the base snap tolerance produces a broken
    tiling (ill-conditioned shallow crossings can scatter junction points a
    few tolerances apart), the computation deterministically retries on a
    coarser snap grid before giving up.
    """
    if op not in ("union", "difference"):
        raise ValueError(f"unknown boolean op {op!r}")
    if a.is_empty():
        return canonical_form(b) if op == "union" else empty_mesh()
    if b.is_empty():
        return canonical_form(a)

    base_tol = _snap_tolerance(a, b)
    failure = None
    for scale in (1.0, 4.0, 16.0):
        try:
            return _boolean_at_tol(op, a, b, base_tol * scale)
        except BooleanFailure as exc:
            failure = exc
    raise failure


def _boolean_at_tol(op: str, a: TriMesh, b: TriMesh, tol: float) -> TriMesh:
    am = weld(a, tol)
    bm = weld(b, tol)
    if am.is_empty() or bm.is_empty():
        if am.is_empty():
            return canonical_form(bm) if op == "union" else empty_mesh()
        return canonical_form(am)

    pairs = _box_pairs(am, bm, 2.0 * tol)
    if len(pairs) == 0:
        out = _combine_disjoint(op, am, bm, tol)
    else:
        out = _combine_split(op, am, bm, pairs, tol)

    out = weld(out, tol)
    # cleanup rounds: start gentle, widen the merge/repair radii only while
    # the tiling still fails to close (ill-conditioned junctions can scatter
    # points ~10·tol apart, but wide radii would chew up tight geometry that
    # closes fine at the gentle setting)
    problems = None
    for merge_radius in (4.0 * tol, 10.0 * tol, 25.0 * tol):
        out = _merge_close_vertices(out, merge_radius)
        out = _drop_degenerate_faces(out, tol)
        out = _cancel_duplicate_faces(out)
        out = _repair_t_junctions(out, max(3.0 * tol, 1.2 * merge_radius))
        candidate = _drop_hairline_components(out)
        if candidate.is_empty() or abs(signed_volume(candidate)) < EMPTY_VOLUME:
            return empty_mesh()
        problems = solid_problems(candidate)
        if not problems:
            return canonical_form(candidate)
    raise BooleanFailure(f"{op} output not solid: " + "; ".join(problems))


def union(a: TriMesh, b: TriMesh) -> TriMesh:
    return boolean("union", a, b)


def difference(a: TriMesh, b: TriMesh) -> TriMesh:
    return boolean("difference", a, b)


def union_all(meshes) -> TriMesh:
    out = empty_mesh()
    for m in meshes:
        out = boolean("union", out, m)
    return out


def _snap_tolerance(a: TriMesh, b: TriMesh) -> float:
    lo = np.minimum(a.bounds()[0], b.bounds()[0])
    hi = np.maximum(a.bounds()[1], b.bounds()[1])
    diag = float(np.linalg.norm(hi - lo))
    return max(1e-7 * diag, 1e-12)


# ---------------------------------------------------------------------------
# broad phase


def _box_pairs(a: TriMesh, b: TriMesh, inflate: float) -> np.ndarray:
    """(k,2) candidate face pairs with overlapping AABBs."""
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


# ---------------------------------------------------------------------------
# narrow phase: constraint segments


class _Constraints:
    """Per-face split segments and per-edge points gathered from the narrow phase."""

    def __init__(self):
        self.face_segments = defaultdict(list)  # face index -> [(p, q), ...]
        self.edge_points = defaultdict(list)  # canonical (u, v) -> [points]

    def has_work(self, face_idx, face_vids) -> bool:
        if face_idx in self.face_segments:
            return True
        return any(_edge_key(face_vids[i], face_vids[(i + 1) % 3]) in self.edge_points for i in range(3))


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _plane_of(tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    nn = np.linalg.norm(n)
    if nn == 0.0:
        return np.zeros(3), tri[0]
    return n / nn, tri[0]


def _collect_constraints(am, bm, pairs, tol):
    ca = _Constraints()
    cb = _Constraints()
    ta_all = am.triangles()
    tb_all = bm.triangles()
    na_all = face_normals(am)
    nb_all = face_normals(bm)

    # vectorized prefilter: drop pairs fully on one side of the other's plane
    t1s = ta_all[pairs[:, 0]]
    t2s = tb_all[pairs[:, 1]]
    n1s = na_all[pairs[:, 0]]
    n2s = nb_all[pairs[:, 1]]
    d_b = np.einsum("kvi,ki->kv", t2s - t1s[:, 0:1, :], n1s)
    d_a = np.einsum("kvi,ki->kv", t1s - t2s[:, 0:1, :], n2s)
    separated = (
        (d_b > tol).all(axis=1)
        | (d_b < -tol).all(axis=1)
        | (d_a > tol).all(axis=1)
        | (d_a < -tol).all(axis=1)
    )
    co_mask = (
        (np.abs(d_b) <= tol).all(axis=1) | (np.abs(d_a) <= tol).all(axis=1)
    ) & (np.abs(np.einsum("ki,ki->k", n1s, n2s)) > 1.0 - 1e-9)
    work = np.nonzero(co_mask | ~separated)[0]

    for w in work:
        fa, fb = int(pairs[w, 0]), int(pairs[w, 1])
        t1 = ta_all[fa]
        t2 = tb_all[fb]
        n1 = na_all[fa]
        n2 = nb_all[fb]
        if not n1.any() or not n2.any():
            continue
        if co_mask[w]:
            segs = _coplanar_overlap(t1, t2, n1, tol)
        else:
            segs = _transversal_segment(am, bm, fa, fb, n1, t1[0], n2, t2[0], tol)
        for p, q in segs:
            if np.linalg.norm(q - p) <= tol:
                continue
            ca.face_segments[fa].append((p, q))
            cb.face_segments[fb].append((p, q))
            for pt in (p, q):
                _register_edge_point(ca, am, fa, pt, tol)
                _register_edge_point(cb, bm, fb, pt, tol)
    return ca, cb


def _register_edge_point(cons, mesh, face, point, tol):
    vids = mesh.faces[face]
    for i in range(3):
        u, v = int(vids[i]), int(vids[(i + 1) % 3])
        pu = mesh.vertices[u]
        pv = mesh.vertices[v]
        d = pv - pu
        L2 = float(d @ d)
        if L2 == 0.0:
            continue
        s = float((point - pu) @ d) / L2
        if s <= 0.0 or s >= 1.0:
            continue
        foot = pu + s * d
        if np.linalg.norm(point - foot) > tol:
            continue
        L = math.sqrt(L2)
        if s * L <= tol or (1.0 - s) * L <= tol:
            continue
        cons.edge_points[_edge_key(u, v)].append(point)


def _transversal_segment(am, bm, fa, fb, n1, p1, n2, p2, tol):
    """Intersection segment of two non-coplanar triangles (canonical arithmetic).

    Edge/plane crossing points are computed from the sorted vertex ids of
    the edge so that neighboring faces sharing the edge reproduce the same
    floating-point point.
    """
    direction = np.cross(n1, n2)
    if np.linalg.norm(direction) < 1e-12:
        return []
    cand1 = _plane_crossings(am, fa, n2, p2, tol)
    cand2 = _plane_crossings(bm, fb, n1, p1, tol)
    if not cand1 or not cand2:
        return []
    t1 = [float(p @ direction) for p in cand1]
    t2 = [float(p @ direction) for p in cand2]
    lo = max(min(t1), min(t2))
    hi = min(max(t1), max(t2))
    if hi - lo <= 1e-12:
        return []
    pts = {}
    for t, p in zip(t1 + t2, cand1 + cand2):
        pts.setdefault(t, p)
    p_lo = pts.get(lo) if lo in pts else None
    p_hi = pts.get(hi) if hi in pts else None
    # interpolate when the clip bound comes from the other triangle's interval
    if p_lo is None or p_hi is None:
        return []
    if np.linalg.norm(p_hi - p_lo) <= tol:
        return []
    return [(p_lo, p_hi)]


def _plane_crossings(mesh, face, n, p0, tol):
    """Points where a face's edges cross (or vertices lie on) the given plane."""
    vids = mesh.faces[face]
    coords = mesh.vertices[vids]
    dist = (coords - p0) @ n
    out = []
    for i in range(3):
        if abs(dist[i]) <= tol:
            out.append(coords[i])
    for i in range(3):
        j = (i + 1) % 3
        di, dj = dist[i], dist[j]
        if (di > tol and dj < -tol) or (di < -tol and dj > tol):
            u, v = int(vids[i]), int(vids[j])
            if u > v:
                u, v = v, u
            pu = mesh.vertices[u]
            pv = mesh.vertices[v]
            du = float((pu - p0) @ n)
            dv = float((pv - p0) @ n)
            s = du / (du - dv)
            out.append(pu + s * (pv - pu))
    return out


def _coplanar_overlap(t1, t2, n1, tol):
    """Boundary segments of the 2D overlap of two coplanar triangles."""
    origin = t1[0]
    ex, ey = _plane_basis(n1, t1)
    q1 = [( (v - origin) @ ex, (v - origin) @ ey) for v in t1]
    q2 = [( (v - origin) @ ex, (v - origin) @ ey) for v in t2]
    poly1 = Polygon(q1)
    poly2 = Polygon(q2)
    if not (poly1.is_valid and poly2.is_valid):
        return []
    inter = poly1.intersection(poly2)
    segs = []
    polys = getattr(inter, "geoms", [inter])
    for geom in polys:
        if geom.geom_type != "Polygon" or geom.area <= tol * tol:
            continue
        ring = list(geom.exterior.coords)
        for (x0, y0), (x1, y1) in zip(ring[:-1], ring[1:]):
            p = origin + x0 * ex + y0 * ey
            q = origin + x1 * ex + y1 * ey
            segs.append((p, q))
    return segs


def _plane_basis(n, tri):
    ex = tri[1] - tri[0]
    ex = ex / np.linalg.norm(ex)
    ey = np.cross(n, ex)
    return ex, ey


# ---------------------------------------------------------------------------
# retriangulation


def _split_mesh_faces(mesh: TriMesh, cons: _Constraints, tol) -> tuple[np.ndarray, np.ndarray]:
    """Apply constraints: returns (soup coords (k,3,3), source face index (k,))."""
    tris = mesh.triangles()
    out_tris = []
    out_src = []
    for f in range(len(mesh.faces)):
        vids = mesh.faces[f]
        if not cons.has_work(f, vids):
            out_tris.append(tris[f])
            out_src.append(f)
            continue
        pieces = _retriangulate_face(mesh, f, cons, tol)
        for piece in pieces:
            out_tris.append(piece)
            out_src.append(f)
    if not out_tris:
        return np.zeros((0, 3, 3)), np.zeros(0, dtype=np.int64)
    return np.asarray(out_tris), np.asarray(out_src, dtype=np.int64)


def _retriangulate_face(mesh, f, cons, tol):
    vids = mesh.faces[f]
    corners = mesh.vertices[vids]
    n, _ = _plane_of(corners)
    if not n.any():
        return []
    origin = corners[0]
    ex, ey = _plane_basis(n, corners)

    pool = {}  # quantized 2D key -> 3D point

    def to2d(p3):
        """Project to the face plane, quantized to the snap grid.

        Quantizing makes logically-identical points (computed through
        different float paths, e.g. a plane crossing evaluated per
        neighboring face) bitwise equal, so GEOS nodes them.
        """
        rx = float((p3 - origin) @ ex)
        ry = float((p3 - origin) @ ey)
        key = (round(rx / tol), round(ry / tol))
        if key not in pool:
            pool[key] = np.asarray(p3, dtype=np.float64)
        return (key[0] * tol, key[1] * tol)

    def lift(p2):
        key = (round(p2[0] / tol), round(p2[1] / tol))
        if key in pool:
            return pool[key]
        p3 = origin + p2[0] * ex + p2[1] * ey
        pool[key] = p3
        return p3

    ring2d = []
    for i in range(3):
        u, v = int(vids[i]), int(vids[(i + 1) % 3])
        pu = mesh.vertices[u]
        ring2d.append(to2d(pu))
        extra = cons.edge_points.get(_edge_key(u, v), [])
        if extra:
            d = mesh.vertices[v] - pu
            L2 = float(d @ d)
            keyed = sorted(
                {(round(float((p - pu) @ d) / L2 / 1e-12)): p for p in extra}.items()
            )
            for _, p in keyed:
                ring2d.append(to2d(p))
    # dedupe consecutive ring points that rounded to the same key
    dedup = [ring2d[0]]
    for p in ring2d[1:]:
        if p != dedup[-1]:
            dedup.append(p)
    if len(dedup) >= 2 and dedup[0] == dedup[-1]:
        dedup.pop()
    ring2d = dedup
    if len(ring2d) < 3:
        return []

    lines = [LineString(ring2d + [ring2d[0]])]
    for p, q in cons.face_segments.get(f, []):
        a2, b2 = to2d(p), to2d(q)
        if a2 != b2:
            lines.append(LineString([a2, b2]))
    merged = unary_union(lines)
    faces2d = list(polygonize(merged))
    tri_poly = Polygon([to2d(c) for c in corners])
    if tri_poly.area <= 0:
        return []

    inflated = tri_poly.buffer(2.0 * tol)
    kept = [
        poly
        for poly in faces2d
        if poly.area > 1e-4 * tol * tol
        and inflated.contains(poly.representative_point())
    ]
    area = sum(p.area for p in kept)
    if abs(area - tri_poly.area) > max(1e-6 * tri_poly.area, 10.0 * tol * mesh.bbox_diagonal()):
        raise BooleanFailure(
            f"face {f}: retriangulation lost area ({area:.6g} of {tri_poly.area:.6g})"
        )

    out = []
    for poly in kept:
        for tri2d in _triangulate_polygon(poly, tol):
            p0, p1, p2 = (lift(v) for v in tri2d)
            # match the parent face orientation (2D CCW == parent normal)
            a = (tri2d[1][0] - tri2d[0][0]) * (tri2d[2][1] - tri2d[0][1]) - (
                tri2d[1][1] - tri2d[0][1]
            ) * (tri2d[2][0] - tri2d[0][0])
            if a >= 0:
                out.append(np.stack([p0, p1, p2]))
            else:
                out.append(np.stack([p0, p2, p1]))
    return out


def _triangulate_polygon(poly: Polygon, tol) -> list[tuple]:
    """Ear-clip a (possibly holed) polygon into 2D vertex triples."""
    poly = shapely_orient(poly, sign=1.0)
    outer = list(poly.exterior.coords)[:-1]
    holes = [list(r.coords)[:-1] for r in poly.interiors]
    ring = _bridge_holes(outer, holes) if holes else outer
    return _ear_clip(ring, tol)


def _bridge_holes(outer, holes):
    """Merge holes into the outer ring with visibility bridges (duplicated verts)."""
    ring = list(outer)
    remaining = sorted(holes, key=lambda h: -max(p[0] for p in h))
    for hole in remaining:
        hi = max(range(len(hole)), key=lambda i: hole[i][0])
        m = hole[hi]
        # only bridge to uniquely-occurring ring vertices so channels from
        # earlier bridges stay disjoint (duplicated coords confuse ear tests)
        counts = defaultdict(int)
        for p in ring:
            counts[p] += 1
        best = None
        best_d = None
        for i, p in enumerate(ring):
            if counts[p] != 1:
                continue
            d = (p[0] - m[0]) ** 2 + (p[1] - m[1]) ** 2
            if best_d is None or d < best_d:
                if _segment_clear(m, p, ring, hole):
                    best = i
                    best_d = d
        if best is None:
            # fall back to nearest vertex even if the bridge grazes an edge
            best = min(
                range(len(ring)),
                key=lambda i: (ring[i][0] - m[0]) ** 2 + (ring[i][1] - m[1]) ** 2,
            )
        hole_rot = hole[hi:] + hole[:hi]
        ring = (
            ring[: best + 1]
            + [m]
            + hole_rot[1:]  # holes from orient() are already CW
            + [m, ring[best]]
            + ring[best + 1 :]
        )
    return ring


def _segment_clear(a, b, ring, hole):
    """True if segment a-b crosses or grazes no ring/hole edge.

    Collinear overlaps and foreign vertices on the open bridge count as
    blocked (shared endpoints are fine)."""
    av = np.asarray(a)
    bv = np.asarray(b)
    d = bv - av
    L2 = float(d @ d)
    if L2 == 0.0:
        return False
    eps = 1e-12 * max(1.0, L2)
    for loop in (ring, hole):
        n = len(loop)
        for i in range(n):
            p, q = loop[i], loop[(i + 1) % n]
            if _segments_cross(a, b, p, q):
                return False
            for w in (p, q):
                if w == a or w == b:
                    continue
                wv = np.asarray(w)
                s = float((wv - av) @ d) / L2
                if s <= 0.0 or s >= 1.0:
                    continue
                foot = av + s * d
                if float(((wv - foot) ** 2).sum()) < eps:
                    return False
    return True


def _segments_cross(a, b, p, q):
    def orient2(o, u, v):
        return (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0])

    if a == p or a == q or b == p or b == q:
        return False
    d1 = orient2(a, b, p)
    d2 = orient2(a, b, q)
    d3 = orient2(p, q, a)
    d4 = orient2(p, q, b)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _ear_clip(ring, tol):
    pts = [np.asarray(p, dtype=np.float64) for p in ring]
    n = len(pts)
    if n < 3:
        return []
    idx = list(range(n))
    span = max(max(abs(p[0]) for p in pts), max(abs(p[1]) for p in pts), 1e-6)
    eps = (1e-9 * span) ** 2
    out = []
    guard = 0
    max_guard = 4 * n * n + 64
    while len(idx) > 3 and guard < max_guard:
        guard += 1
        clipped = False
        for ii in range(len(idx)):
            ia = idx[ii - 1]
            ib = idx[ii]
            ic = idx[(ii + 1) % len(idx)]
            a, b, c = pts[ia], pts[ib], pts[ic]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= eps:
                continue
            # bridged rings duplicate coordinates: a coincident copy of an
            # ear corner must not block the ear
            if any(
                _in_triangle(pts[j], a, b, c, eps)
                for j in idx
                if j not in (ia, ib, ic)
                and not (
                    tuple(pts[j]) == tuple(a)
                    or tuple(pts[j]) == tuple(b)
                    or tuple(pts[j]) == tuple(c)
                )
            ):
                continue
            out.append((tuple(a), tuple(b), tuple(c)))
            del idx[ii]
            clipped = True
            break
        if not clipped:
            break
    if len(idx) == 3:
        a, b, c = pts[idx[0]], pts[idx[1]], pts[idx[2]]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(cross) > eps:
            out.append((tuple(a), tuple(b), tuple(c)))
    elif len(idx) > 3:
        # numerical deadlock: fan from the most convex vertex as a last resort
        best = max(
            range(len(idx)),
            key=lambda ii: _corner_cross(pts, idx, ii),
        )
        o = idx[best]
        rest = idx[best + 1 :] + idx[:best]
        for u, v in zip(rest[:-1], rest[1:]):
            out.append((tuple(pts[o]), tuple(pts[u]), tuple(pts[v])))
    return out


def _corner_cross(pts, idx, ii):
    a = pts[idx[ii - 1]]
    b = pts[idx[ii]]
    c = pts[idx[(ii + 1) % len(idx)]]
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _in_triangle(p, a, b, c, eps):
    d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
    d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
    return d1 >= -eps and d2 >= -eps and d3 >= -eps


# ---------------------------------------------------------------------------
# classification


class _SurfaceClassifier:
    """Signed-side queries against one watertight mesh (pseudo-normal method).

    Precomputes angle-weighted vertex normals and summed edge normals so the
    per-query work is pure numpy: closest point, feature detection via
    barycentrics, then the matching pseudo-normal.
    """

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        self.bvh = kernels.build_bvh(mesh.vertices, mesh.faces)
        self.face_n = face_normals(mesh)
        f = mesh.faces
        v = mesh.vertices

        # angle-weighted vertex normals
        self.vertex_n = np.zeros((len(v), 3))
        for k in range(3):
            p = v[f[:, k]]
            u1 = v[f[:, (k + 1) % 3]] - p
            u2 = v[f[:, (k + 2) % 3]] - p
            n1 = np.linalg.norm(u1, axis=1)
            n2 = np.linalg.norm(u2, axis=1)
            denom = np.where(n1 * n2 == 0, 1.0, n1 * n2)
            ang = np.arccos(np.clip(np.einsum("mi,mi->m", u1, u2) / denom, -1, 1))
            np.add.at(self.vertex_n, f[:, k], ang[:, None] * self.face_n)

        # summed normals per undirected edge; edge id per face corner k is the
        # edge (vk, vk+1)
        pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        pairs = np.sort(pairs, axis=1)
        uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
        self.edge_ids = inverse.reshape(3, len(f)).T  # (m, 3)
        self.edge_n = np.zeros((len(uniq), 3))
        np.add.at(self.edge_n, inverse, np.tile(self.face_n, (3, 1)))

        # barycentric solve data per face
        self._fa = v[f[:, 0]]
        self._ab = v[f[:, 1]] - self._fa
        self._ac = v[f[:, 2]] - self._fa

    def signed_info(self, points):
        """(unsigned distance, closest point, pseudo normal) per query point."""
        pts = np.ascontiguousarray(points, dtype=np.float64)
        d2, face_idx, cp = kernels.closest_points(
            self.mesh.vertices, self.mesh.faces, self.bvh, pts
        )
        fi = face_idx.astype(np.int64)
        ab = self._ab[fi]
        ac = self._ac[fi]
        rel = cp - self._fa[fi]
        m00 = np.einsum("ki,ki->k", ab, ab)
        m01 = np.einsum("ki,ki->k", ab, ac)
        m11 = np.einsum("ki,ki->k", ac, ac)
        r0 = np.einsum("ki,ki->k", rel, ab)
        r1 = np.einsum("ki,ki->k", rel, ac)
        det = m00 * m11 - m01 * m01
        det = np.where(det == 0, 1.0, det)
        s = (m11 * r0 - m01 * r1) / det
        t = (m00 * r1 - m01 * r0) / det
        u = 1.0 - s - t

        eps = 1e-6
        pseudo = self.face_n[fi].copy()
        edge_ab = (t < eps) & (s >= eps) & (u >= eps)
        edge_ac = (s < eps) & (t >= eps) & (u >= eps)
        edge_bc = (u < eps) & (s >= eps) & (t >= eps)
        vert_a = (s < eps) & (t < eps)
        vert_b = (u < eps) & (t < eps) & ~vert_a
        vert_c = (u < eps) & (s < eps) & ~vert_a & ~vert_b
        eids = self.edge_ids[fi]
        pseudo[edge_ab] = self.edge_n[eids[edge_ab, 0]]
        pseudo[edge_bc] = self.edge_n[eids[edge_bc, 1]]
        pseudo[edge_ac] = self.edge_n[eids[edge_ac, 2]]
        faces = self.mesh.faces
        pseudo[vert_a] = self.vertex_n[faces[fi[vert_a], 0]]
        pseudo[vert_b] = self.vertex_n[faces[fi[vert_b], 1]]
        pseudo[vert_c] = self.vertex_n[faces[fi[vert_c], 2]]
        lens = np.linalg.norm(pseudo, axis=1, keepdims=True)
        lens[lens == 0] = 1.0
        return np.sqrt(d2), cp, pseudo / lens


def _classify_soup(soup, classifier, on_tol):
    """Label each soup triangle OUT/IN/ON_SAME/ON_OPP against the classifier mesh.

    In/out comes from the winding number at the fragment centroid (robust at
    any distance from the surface of a watertight mesh); the closest-point
    query only detects coincident (ON) fragments, where winding is undefined.
    """
    if len(soup) == 0:
        return np.zeros(0, dtype=np.int64)
    centroids = np.ascontiguousarray(soup.mean(axis=1))
    n = np.cross(soup[:, 1] - soup[:, 0], soup[:, 2] - soup[:, 0])
    lens = np.linalg.norm(n, axis=1, keepdims=True)
    lens[lens == 0] = 1.0
    n = n / lens
    dist, _cp, pseudo = classifier.signed_info(centroids)
    align = np.einsum("ki,ki->k", n, pseudo)
    w = kernels.winding_numbers(
        classifier.mesh.vertices, classifier.mesh.faces, centroids
    )
    labels = np.where(w > 0.5, IN, OUT)
    near = dist < on_tol
    labels[near & (align > 0.9)] = ON_SAME
    labels[near & (align < -0.9)] = ON_OPP
    return labels


# ---------------------------------------------------------------------------
# assembly


def _combine_split(op, am, bm, pairs, tol):
    ca, cb = _collect_constraints(am, bm, pairs, tol)
    soup_a, _ = _split_mesh_faces(am, ca, tol)
    soup_b, _ = _split_mesh_faces(bm, cb, tol)
    cls_b = _SurfaceClassifier(bm)
    cls_a = _SurfaceClassifier(am)
    on_tol = 3.0 * tol
    lab_a = _classify_soup(soup_a, cls_b, on_tol)
    lab_b = _classify_soup(soup_b, cls_a, on_tol)
    parts = []
    if op == "union":
        parts.append(soup_a[(lab_a == OUT) | (lab_a == ON_SAME)])
        parts.append(soup_b[lab_b == OUT])
    else:
        parts.append(soup_a[(lab_a == OUT) | (lab_a == ON_OPP)])
        parts.append(soup_b[lab_b == IN][:, ::-1, :])
    return _soup_to_mesh(np.concatenate([p for p in parts if len(p)] or [np.zeros((0, 3, 3))]))


def _combine_disjoint(op, am, bm, tol):
    """No face-pair contact: classify whole components by one surface vertex.

    Without contact, every component of one mesh lies entirely inside or
    outside the other, so any vertex of the component decides.
    """
    keep = []
    for comp in _components(am):
        probe = am.vertices[am.faces[comp[0], 0]]
        inside = _point_inside(bm, probe)
        sub = am.triangles()[comp]
        if not inside:  # union keeps outside parts; difference keeps them too
            keep.append(sub)
    for comp in _components(bm):
        probe = bm.vertices[bm.faces[comp[0], 0]]
        inside = _point_inside(am, probe)
        sub = bm.triangles()[comp]
        if op == "union" and not inside:
            keep.append(sub)
        elif op == "difference" and inside:
            keep.append(sub[:, ::-1, :])
    if not keep:
        return empty_mesh()
    return _soup_to_mesh(np.concatenate(keep))


def _point_inside(mesh, point):
    w = kernels.winding_numbers(
        mesh.vertices, mesh.faces, np.ascontiguousarray(point[None, :])
    )
    return bool(w[0] > 0.5)


def _soup_to_mesh(soup: np.ndarray) -> TriMesh:
    if len(soup) == 0:
        return empty_mesh()
    verts = soup.reshape(-1, 3)
    faces = np.arange(len(verts), dtype=np.int32).reshape(-1, 3)
    return TriMesh(verts, faces)


def _cancel_duplicate_faces(mesh: TriMesh) -> TriMesh:
    """Collapse duplicate faces; opposite-orientation pairs annihilate."""
    if mesh.is_empty():
        return mesh
    f = mesh.faces
    roll = np.argmin(f, axis=1)
    cols = (np.arange(3)[None, :] + roll[:, None]) % 3
    cyc = np.take_along_axis(f, cols, axis=1)  # min-first, orientation kept
    key = np.sort(f, axis=1)
    groups = defaultdict(list)
    for i in range(len(f)):
        groups[tuple(key[i])].append(i)
    keep = []
    for idx in groups.values():
        if len(idx) == 1:
            keep.append(idx[0])
            continue
        fwd = [i for i in idx if tuple(cyc[i]) == tuple(cyc[idx[0]])]
        rev = [i for i in idx if i not in fwd]
        n = len(fwd) - len(rev)
        if n > 0:
            keep.extend(fwd[:n])
        elif n < 0:
            keep.extend(rev[:-n])
    keep.sort()
    return TriMesh(mesh.vertices, mesh.faces[keep])


def _merge_close_vertices(mesh: TriMesh, radius: float) -> TriMesh:
    """Collapse vertex clusters within radius onto one representative.

    Ill-conditioned junction points computed through different float paths
    on the two sides of a boolean can land a few tolerances apart; grid
    welding cannot merge them when they straddle a cell boundary.
    """
    if mesh.is_empty():
        return mesh
    tree = cKDTree(mesh.vertices)
    close = tree.query_pairs(radius, output_type="ndarray")
    if len(close) == 0:
        return mesh
    parent = np.arange(len(mesh.vertices))

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for u, v in close:
        ru, rv = find(int(u)), find(int(v))
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    # deterministic representative: lexicographically smallest coordinate
    order = np.lexsort((mesh.vertices[:, 2], mesh.vertices[:, 1], mesh.vertices[:, 0]))
    rep = {}
    for i in order:
        root = find(int(i))
        if root not in rep:
            rep[root] = int(i)
    remap = np.array([rep[find(i)] for i in range(len(mesh.vertices))])
    faces = remap[mesh.faces]
    keep = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 2] != faces[:, 0])
    )
    return TriMesh(mesh.vertices, faces[keep])


def _drop_degenerate_faces(mesh: TriMesh, tol: float) -> TriMesh:
    """Remove sliver faces thinner than the snap tolerance.

    Their apex vertex lies on the opposite edge, so the subsequent
    T-junction repair re-stitches the neighbors through it.
    """
    if mesh.is_empty():
        return mesh
    t = mesh.triangles()
    e0 = t[:, 1] - t[:, 0]
    e1 = t[:, 2] - t[:, 1]
    e2 = t[:, 0] - t[:, 2]
    area2 = np.linalg.norm(np.cross(e0, e1), axis=1)
    longest = np.maximum(
        np.linalg.norm(e0, axis=1),
        np.maximum(np.linalg.norm(e1, axis=1), np.linalg.norm(e2, axis=1)),
    )
    height = np.where(longest > 0, area2 / longest, 0.0)
    return TriMesh(mesh.vertices, mesh.faces[height > 1.0 * tol])


def _repair_t_junctions(mesh: TriMesh, on_tol: float) -> TriMesh:
    """Split face edges at existing vertices lying within on_tol of them."""
    if mesh.is_empty():
        return mesh
    verts = mesh.vertices
    tree = cKDTree(verts)

    def find_split(face, candidates):
        """(edge index, vertex) for the first splittable edge, else None."""
        cand_pts = verts[candidates]
        for e in range(3):
            u, v = face[e], face[(e + 1) % 3]
            pu, pv = verts[u], verts[v]
            d = pv - pu
            L2 = float(d @ d)
            L = math.sqrt(L2)
            if L <= 3.0 * on_tol:
                continue
            s = (cand_pts - pu) @ d / L2
            inside = (s * L > on_tol) & ((1.0 - s) * L > on_tol)
            if not inside.any():
                continue
            foot = pu + s[:, None] * d
            dist2 = ((cand_pts - foot) ** 2).sum(axis=1)
            # candidates never contain the face's own vertices: the bulk
            # query subtracted them and splits remove the used vertex
            ok = inside & (dist2 <= on_tol * on_tol)
            if ok.any():
                hits = np.nonzero(ok)[0]
                pick = hits[np.argmin(s[hits])]
                return (e, int(candidates[pick]))
        return None

    # one bulk query per face: vertices inside the face's circumball are the
    # only split candidates, and they remain valid for all sub-faces
    f = np.asarray(mesh.faces)
    tri = verts[f]
    centers = tri.mean(axis=1)
    radii = np.linalg.norm(tri - centers[:, None, :], axis=2).max(axis=1) + 2.0 * on_tol
    near = tree.query_ball_point(centers, radii)

    out = []
    pending = []
    for fi, lst in enumerate(near):
        face = tuple(int(x) for x in f[fi])
        others = sorted(set(int(x) for x in lst) - set(face))
        if others:
            pending.append((face, others))
        else:
            out.append(face)
    guard = 0
    limit = 40 * max(len(f), 1) + 1000
    while pending and guard < limit:
        face, candidates = pending.pop()
        guard += 1
        split = find_split(face, candidates)
        if split is None:
            out.append(face)
        else:
            e, w = split
            a, b, c = face[e], face[(e + 1) % 3], face[(e + 2) % 3]
            rest = [x for x in candidates if x != w]
            pending.append(((a, w, c), rest))
            pending.append(((w, b, c), rest))
    if pending:
        raise BooleanFailure("t-junction repair did not converge")
    return TriMesh(verts, np.asarray(out, dtype=np.int32))


def _components(mesh: TriMesh) -> list[np.ndarray]:
    """Connected face components (shared-edge adjacency)."""
    n = len(mesh.faces)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edge_face = {}
    for fi, (i, j, k) in enumerate(mesh.faces):
        for u, v in ((int(i), int(j)), (int(j), int(k)), (int(k), int(i))):
            key = _edge_key(u, v)
            if key in edge_face:
                a, b = find(edge_face[key]), find(fi)
                if a != b:
                    parent[a] = b
            else:
                edge_face[key] = fi
    comps = defaultdict(list)
    for fi in range(n):
        comps[find(fi)].append(fi)
    return [np.asarray(v, dtype=np.int64) for v in comps.values()]


def _drop_hairline_components(mesh: TriMesh) -> TriMesh:
    if mesh.is_empty():
        return mesh
    keep = []
    for comp in _components(mesh):
        sub = TriMesh(mesh.vertices, mesh.faces[comp])
        if abs(signed_volume(sub)) >= EMPTY_VOLUME:
            keep.append(comp)
    if not keep:
        return empty_mesh()
    return TriMesh(mesh.vertices, mesh.faces[np.concatenate(keep)])
