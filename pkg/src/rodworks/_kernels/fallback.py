"""Pure-numpy kernel implementations.

Reference backend for the hot loops: generalized winding numbers,
any-hit ray casting, closest-point queries and triangle-triangle
intersection tests.  The compiled backend in `_core.pyx` must agree with
these bit-for-bit on the boolean outputs and to float tolerance on the
scalar ones.
"""

from __future__ import annotations

import numpy as np

POINT_CHUNK = 512
RAY_CHUNK = 256


def winding_numbers(vertices, faces, points):
    """Generalized winding number of each query point (≈1 inside, ≈0 outside).

    Uses the van Oosterom–Strackee solid-angle formula summed over faces.
    """
    pts = np.asarray(points, dtype=np.float64)
    tri = vertices[faces]  # (m, 3, 3)
    out = np.empty(len(pts), dtype=np.float64)
    for lo in range(0, len(pts), POINT_CHUNK):
        q = pts[lo : lo + POINT_CHUNK]  # (k, 3)
        a = tri[None, :, 0, :] - q[:, None, :]  # (k, m, 3)
        b = tri[None, :, 1, :] - q[:, None, :]
        c = tri[None, :, 2, :] - q[:, None, :]
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(c, axis=2)
        det = np.einsum("kmi,kmi->km", a, np.cross(b, c))
        denom = (
            la * lb * lc
            + np.einsum("kmi,kmi->km", a, b) * lc
            + np.einsum("kmi,kmi->km", b, c) * la
            + np.einsum("kmi,kmi->km", c, a) * lb
        )
        omega = 2.0 * np.arctan2(det, denom)
        out[lo : lo + POINT_CHUNK] = omega.sum(axis=1) / (4.0 * np.pi)
    return out


def ray_any_hits(vertices, faces, bvh, origins, dirs, t_eps):
    """True per ray iff it hits any triangle at t > t_eps (Möller–Trumbore).

    `bvh` is accepted for API parity with the compiled backend; this
    implementation brute-forces chunks of rays against all triangles.
    """
    del bvh
    tri = vertices[faces]
    v0 = tri[:, 0, :]
    e1 = tri[:, 1, :] - v0
    e2 = tri[:, 2, :] - v0
    o = np.asarray(origins, dtype=np.float64)
    d = np.asarray(dirs, dtype=np.float64)
    hits = np.zeros(len(o), dtype=bool)
    for lo in range(0, len(o), RAY_CHUNK):
        oc = o[lo : lo + RAY_CHUNK]
        dc = d[lo : lo + RAY_CHUNK]
        pvec = np.cross(dc[:, None, :], e2[None, :, :])  # (k, m, 3)
        det = np.einsum("mi,kmi->km", e1, pvec)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_det = 1.0 / det
            tvec = oc[:, None, :] - v0[None, :, :]
            u = np.einsum("kmi,kmi->km", tvec, pvec) * inv_det
            qvec = np.cross(tvec, e1[None, :, :])
            v = np.einsum("kmi,kmi->km", qvec, dc[:, None, :]) * inv_det
            t = np.einsum("kmi,mi->km", qvec, e2) * inv_det
        ok = (
            (np.abs(det) > 1e-14)
            & (u >= -1e-12)
            & (v >= -1e-12)
            & (u + v <= 1.0 + 1e-12)
            & (t > t_eps)
        )
        hits[lo : lo + RAY_CHUNK] = ok.any(axis=1)
    return hits


def ao_hit_fractions(vertices, faces, bvh, positions, normals, tangents, u1, u2, offset):
    """Fraction of cosine-weighted hemisphere rays per sample that hit the mesh."""
    n, rays = u1.shape
    r = np.sqrt(u1)
    theta = 2.0 * np.pi * u2
    t2 = np.cross(normals, tangents)
    dirs = (
        (r * np.cos(theta))[..., None] * tangents[:, None, :]
        + (r * np.sin(theta))[..., None] * t2[:, None, :]
        + np.sqrt(1.0 - u1)[..., None] * normals[:, None, :]
    )
    origins = positions + offset * normals
    origins = np.repeat(origins[:, None, :], rays, axis=1)
    hits = ray_any_hits(
        vertices,
        faces,
        bvh,
        np.ascontiguousarray(origins.reshape(-1, 3)),
        np.ascontiguousarray(dirs.reshape(-1, 3)),
        0.0,
    )
    return hits.reshape(n, rays).mean(axis=1)


def closest_points(vertices, faces, bvh, points):
    """Closest surface point per query: (dist_sq, face_index, point)."""
    del bvh
    tri = vertices[faces]
    a = tri[:, 0, :]
    b = tri[:, 1, :]
    c = tri[:, 2, :]
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    best_d2 = np.empty(n, dtype=np.float64)
    best_face = np.empty(n, dtype=np.int32)
    best_pt = np.empty((n, 3), dtype=np.float64)
    for lo in range(0, n, POINT_CHUNK):
        q = pts[lo : lo + POINT_CHUNK]
        cp = _closest_on_triangles(q, a, b, c)  # (k, m, 3)
        d2 = ((cp - q[:, None, :]) ** 2).sum(axis=2)
        idx = np.argmin(d2, axis=1)
        rows = np.arange(len(q))
        best_d2[lo : lo + POINT_CHUNK] = d2[rows, idx]
        best_face[lo : lo + POINT_CHUNK] = idx.astype(np.int32)
        best_pt[lo : lo + POINT_CHUNK] = cp[rows, idx]
    return best_d2, best_face, best_pt


def _closest_on_triangles(q, a, b, c):
    """Ericson's closest-point-on-triangle, vectorized (k points × m tris)."""
    ab = (b - a)[None, :, :]
    ac = (c - a)[None, :, :]
    qp = q[:, None, :]
    ap = qp - a[None, :, :]
    d1 = np.einsum("kmi,kmi->km", np.broadcast_arrays(ab, ap)[0], ap)
    d2 = np.einsum("kmi,kmi->km", np.broadcast_arrays(ac, ap)[0], ap)
    bp = qp - b[None, :, :]
    d3 = np.einsum("kmi,kmi->km", np.broadcast_arrays(ab, bp)[0], bp)
    d4 = np.einsum("kmi,kmi->km", np.broadcast_arrays(ac, bp)[0], bp)
    cp_ = qp - c[None, :, :]
    d5 = np.einsum("kmi,kmi->km", np.broadcast_arrays(ab, cp_)[0], cp_)
    d6 = np.einsum("kmi,kmi->km", np.broadcast_arrays(ac, cp_)[0], cp_)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = np.where(d1 - d3 != 0.0, d1 / (d1 - d3), 0.0)
        t_ac = np.where(d2 - d6 != 0.0, d2 / (d2 - d6), 0.0)
        den_bc = (d4 - d3) + (d5 - d6)
        t_bc = np.where(den_bc != 0.0, (d4 - d3) / den_bc, 0.0)
        den = va + vb + vc
        v_in = np.where(den != 0.0, vb / den, 0.0)
        w_in = np.where(den != 0.0, vc / den, 0.0)

    k, m = d1.shape
    out = np.empty((k, m, 3), dtype=np.float64)
    # interior (lowest priority, filled first then overwritten)
    out[:] = a[None, :, :] + ab * v_in[..., None] + ac * w_in[..., None]
    m_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    np.copyto(
        out,
        b[None, :, :] + (c - b)[None, :, :] * t_bc[..., None],
        where=m_bc[..., None],
    )
    m_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    np.copyto(out, a[None, :, :] + ac * t_ac[..., None], where=m_ac[..., None])
    m_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    np.copyto(out, a[None, :, :] + ab * t_ab[..., None], where=m_ab[..., None])
    m_c = (d6 >= 0) & (d5 <= d6)
    np.copyto(out, np.broadcast_to(c[None, :, :], out.shape), where=m_c[..., None])
    m_b = (d3 >= 0) & (d4 <= d3)
    np.copyto(out, np.broadcast_to(b[None, :, :], out.shape), where=m_b[..., None])
    m_a = (d1 <= 0) & (d2 <= 0)
    np.copyto(out, np.broadcast_to(a[None, :, :], out.shape), where=m_a[..., None])
    return out


def tri_pairs_intersect(va, fa, vb, fb, pairs):
    """Closed intersection test per candidate (faceA, faceB) pair.

    Separating-axis test over 17 axes: both normals, 9 edge-edge cross
    products and 6 normal-edge cross products (the latter make coplanar
    configurations exact).  Touching triangles count as intersecting.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    t1 = va[fa[pairs[:, 0]]]  # (k, 3, 3)
    t2 = vb[fb[pairs[:, 1]]]
    k = len(pairs)
    if k == 0:
        return np.zeros(0, dtype=bool)

    e1 = np.stack([t1[:, 1] - t1[:, 0], t1[:, 2] - t1[:, 1], t1[:, 0] - t1[:, 2]], axis=1)
    e2 = np.stack([t2[:, 1] - t2[:, 0], t2[:, 2] - t2[:, 1], t2[:, 0] - t2[:, 2]], axis=1)
    n1 = np.cross(e1[:, 0], e1[:, 1])
    n2 = np.cross(e2[:, 0], e2[:, 1])

    axes = [n1[:, None, :], n2[:, None, :]]
    axes.append(np.cross(e1[:, :, None, :], e2[:, None, :, :]).reshape(k, 9, 3))
    axes.append(np.cross(n1[:, None, :], e1))
    axes.append(np.cross(n2[:, None, :], e2))
    axes = np.concatenate(axes, axis=1)  # (k, 17, 3)

    p1 = np.einsum("kai,kvi->kav", axes, t1)  # (k, 17, 3)
    p2 = np.einsum("kai,kvi->kav", axes, t2)
    scale = np.einsum("kai,kai->ka", axes, axes)
    valid = scale > 1e-24 * np.maximum(
        1.0, (t1**2).sum(axis=(1, 2)) + (t2**2).sum(axis=(1, 2))
    )[:, None]
    sep = (p1.max(axis=2) < p2.min(axis=2)) | (p2.max(axis=2) < p1.min(axis=2))
    return ~(sep & valid).any(axis=1)
