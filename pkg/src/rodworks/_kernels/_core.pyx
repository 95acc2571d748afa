# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: winding numbers, BVH ray casting, closest points,
triangle-triangle tests.  Mirrors rodworks._kernels.fallback."""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, fabs, sqrt
from libc.math cimport cos as _cos, sin as _sin

cnp.import_array()

DEF STACK_CAP = 128


def winding_numbers(double[:, ::1] vertices, int[:, ::1] faces,
                    double[:, ::1] points):
    cdef Py_ssize_t nq = points.shape[0]
    cdef Py_ssize_t nf = faces.shape[0]
    out_arr = np.empty(nq, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, f
    cdef double ax, ay, az, bx, by, bz, cx, cy, cz
    cdef double la, lb, lc, det, denom, total
    cdef double qx, qy, qz
    cdef double four_pi = 4.0 * 3.14159265358979323846
    for i in range(nq):
        qx = points[i, 0]
        qy = points[i, 1]
        qz = points[i, 2]
        total = 0.0
        for f in range(nf):
            ax = vertices[faces[f, 0], 0] - qx
            ay = vertices[faces[f, 0], 1] - qy
            az = vertices[faces[f, 0], 2] - qz
            bx = vertices[faces[f, 1], 0] - qx
            by = vertices[faces[f, 1], 1] - qy
            bz = vertices[faces[f, 1], 2] - qz
            cx = vertices[faces[f, 2], 0] - qx
            cy = vertices[faces[f, 2], 1] - qy
            cz = vertices[faces[f, 2], 2] - qz
            la = sqrt(ax * ax + ay * ay + az * az)
            lb = sqrt(bx * bx + by * by + bz * bz)
            lc = sqrt(cx * cx + cy * cy + cz * cz)
            det = (ax * (by * cz - bz * cy)
                   - ay * (bx * cz - bz * cx)
                   + az * (bx * cy - by * cx))
            denom = (la * lb * lc
                     + (ax * bx + ay * by + az * bz) * lc
                     + (bx * cx + by * cy + bz * cz) * la
                     + (cx * ax + cy * ay + cz * az) * lb)
            total += 2.0 * atan2(det, denom)
        out[i] = total / four_pi
    return out_arr


cdef inline bint _ray_tri(double ox, double oy, double oz,
                          double dx, double dy, double dz,
                          double v0x, double v0y, double v0z,
                          double e1x, double e1y, double e1z,
                          double e2x, double e2y, double e2z,
                          double t_eps) nogil:
    cdef double px = dy * e2z - dz * e2y
    cdef double py = dz * e2x - dx * e2z
    cdef double pz = dx * e2y - dy * e2x
    cdef double det = e1x * px + e1y * py + e1z * pz
    if fabs(det) <= 1e-14:
        return 0
    cdef double inv = 1.0 / det
    cdef double tx = ox - v0x
    cdef double ty = oy - v0y
    cdef double tz = oz - v0z
    cdef double u = (tx * px + ty * py + tz * pz) * inv
    if u < -1e-12 or u > 1.0 + 1e-12:
        return 0
    cdef double qx = ty * e1z - tz * e1y
    cdef double qy = tz * e1x - tx * e1z
    cdef double qz = tx * e1y - ty * e1x
    cdef double v = (dx * qx + dy * qy + dz * qz) * inv
    if v < -1e-12 or u + v > 1.0 + 1e-12:
        return 0
    cdef double t = (e2x * qx + e2y * qy + e2z * qz) * inv
    return t > t_eps


cdef bint _trace_any(double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2,
                     double[:, ::1] bmin, double[:, ::1] bmax,
                     int[::1] left, int[::1] right,
                     int[::1] start, int[::1] count, int[::1] order,
                     double ox, double oy, double oz,
                     double dx, double dy, double dz, double t_eps) nogil:
    cdef int stack[STACK_CAP]
    cdef int sp, node, f, k
    cdef double invx, invy, invz, t0, t1, tn, tf, tmp
    invx = 1.0 / dx if dx != 0.0 else 1e300
    invy = 1.0 / dy if dy != 0.0 else 1e300
    invz = 1.0 / dz if dz != 0.0 else 1e300
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        t0 = (bmin[node, 0] - ox) * invx
        t1 = (bmax[node, 0] - ox) * invx
        if t0 > t1:
            tmp = t0; t0 = t1; t1 = tmp
        tn = t0
        tf = t1
        t0 = (bmin[node, 1] - oy) * invy
        t1 = (bmax[node, 1] - oy) * invy
        if t0 > t1:
            tmp = t0; t0 = t1; t1 = tmp
        if t0 > tn:
            tn = t0
        if t1 < tf:
            tf = t1
        t0 = (bmin[node, 2] - oz) * invz
        t1 = (bmax[node, 2] - oz) * invz
        if t0 > t1:
            tmp = t0; t0 = t1; t1 = tmp
        if t0 > tn:
            tn = t0
        if t1 < tf:
            tf = t1
        if tn > tf or tf < t_eps:
            continue
        if left[node] < 0:
            for k in range(start[node], start[node] + count[node]):
                f = order[k]
                if _ray_tri(ox, oy, oz, dx, dy, dz,
                            v0[f, 0], v0[f, 1], v0[f, 2],
                            e1[f, 0], e1[f, 1], e1[f, 2],
                            e2[f, 0], e2[f, 1], e2[f, 2],
                            t_eps):
                    return 1
        else:
            if sp + 2 <= STACK_CAP:
                stack[sp] = left[node]
                sp += 1
                stack[sp] = right[node]
                sp += 1
    return 0


def ao_hit_fractions(double[:, ::1] vertices, int[:, ::1] faces, bvh,
                     double[:, ::1] positions, double[:, ::1] normals,
                     double[:, ::1] tangents, double[:, ::1] u1,
                     double[:, ::1] u2, double offset):
    """Fraction of cosine-weighted hemisphere rays per sample that hit the mesh."""
    cdef double[:, ::1] bmin = bvh.bounds_min
    cdef double[:, ::1] bmax = bvh.bounds_max
    cdef int[::1] left = bvh.left
    cdef int[::1] right = bvh.right
    cdef int[::1] start = bvh.start
    cdef int[::1] count = bvh.count
    cdef int[::1] order = bvh.tri_order
    tri = np.asarray(vertices)[np.asarray(faces)]
    v0_arr = np.ascontiguousarray(tri[:, 0, :])
    e1_arr = np.ascontiguousarray(tri[:, 1, :] - tri[:, 0, :])
    e2_arr = np.ascontiguousarray(tri[:, 2, :] - tri[:, 0, :])
    cdef double[:, ::1] v0 = v0_arr
    cdef double[:, ::1] e1 = e1_arr
    cdef double[:, ::1] e2 = e2_arr
    cdef Py_ssize_t n = positions.shape[0]
    cdef Py_ssize_t rays = u1.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, m
    cdef double nx, ny, nz, tx, ty, tz, bx, by, bz
    cdef double ox, oy, oz, dx, dy, dz, rr, theta, up, ca, sa
    cdef double two_pi = 6.283185307179586
    cdef int hits
    for i in range(n):
        nx = normals[i, 0]; ny = normals[i, 1]; nz = normals[i, 2]
        tx = tangents[i, 0]; ty = tangents[i, 1]; tz = tangents[i, 2]
        bx = ny * tz - nz * ty
        by = nz * tx - nx * tz
        bz = nx * ty - ny * tx
        ox = positions[i, 0] + offset * nx
        oy = positions[i, 1] + offset * ny
        oz = positions[i, 2] + offset * nz
        hits = 0
        for m in range(rays):
            rr = sqrt(u1[i, m])
            theta = two_pi * u2[i, m]
            ca = rr * _cos(theta)
            sa = rr * _sin(theta)
            up = sqrt(1.0 - u1[i, m])
            dx = ca * tx + sa * bx + up * nx
            dy = ca * ty + sa * by + up * ny
            dz = ca * tz + sa * bz + up * nz
            if _trace_any(v0, e1, e2, bmin, bmax, left, right, start,
                          count, order, ox, oy, oz, dx, dy, dz, 0.0):
                hits += 1
        out[i] = hits / <double> rays
    return out_arr


def ray_any_hits(double[:, ::1] vertices, int[:, ::1] faces, bvh,
                 double[:, ::1] origins, double[:, ::1] dirs, double t_eps):
    cdef double[:, ::1] bmin = bvh.bounds_min
    cdef double[:, ::1] bmax = bvh.bounds_max
    cdef int[::1] left = bvh.left
    cdef int[::1] right = bvh.right
    cdef int[::1] start = bvh.start
    cdef int[::1] count = bvh.count
    cdef int[::1] order = bvh.tri_order
    tri = np.asarray(vertices)[np.asarray(faces)]
    v0_arr = np.ascontiguousarray(tri[:, 0, :])
    e1_arr = np.ascontiguousarray(tri[:, 1, :] - tri[:, 0, :])
    e2_arr = np.ascontiguousarray(tri[:, 2, :] - tri[:, 0, :])
    cdef double[:, ::1] v0 = v0_arr
    cdef double[:, ::1] e1 = e1_arr
    cdef double[:, ::1] e2 = e2_arr
    cdef Py_ssize_t nq = origins.shape[0]
    out_arr = np.zeros(nq, dtype=bool)
    cdef cnp.uint8_t[::1] out = out_arr.view(np.uint8)
    cdef Py_ssize_t i
    for i in range(nq):
        out[i] = _trace_any(
            v0, e1, e2, bmin, bmax, left, right, start, count, order,
            origins[i, 0], origins[i, 1], origins[i, 2],
            dirs[i, 0], dirs[i, 1], dirs[i, 2], t_eps)
    return out_arr


cdef inline double _closest_on_tri(double qx, double qy, double qz,
                                   double ax, double ay, double az,
                                   double bx, double by, double bz,
                                   double cx, double cy, double cz,
                                   double* outx, double* outy, double* outz) nogil:
    cdef double abx = bx - ax, aby = by - ay, abz = bz - az
    cdef double acx = cx - ax, acy = cy - ay, acz = cz - az
    cdef double apx = qx - ax, apy = qy - ay, apz = qz - az
    cdef double d1 = abx * apx + aby * apy + abz * apz
    cdef double d2 = acx * apx + acy * apy + acz * apz
    cdef double px, py, pz, v, w, denom
    cdef double bpx = qx - bx, bpy = qy - by, bpz = qz - bz
    cdef double d3 = abx * bpx + aby * bpy + abz * bpz
    cdef double d4 = acx * bpx + acy * bpy + acz * bpz
    cdef double cpx = qx - cx, cpy = qy - cy, cpz = qz - cz
    cdef double d5 = abx * cpx + aby * cpy + abz * cpz
    cdef double d6 = acx * cpx + acy * cpy + acz * cpz
    cdef double va, vb, vc
    if d1 <= 0.0 and d2 <= 0.0:
        px = ax; py = ay; pz = az
    elif d3 >= 0.0 and d4 <= d3:
        px = bx; py = by; pz = bz
    elif d6 >= 0.0 and d5 <= d6:
        px = cx; py = cy; pz = cz
    else:
        vc = d1 * d4 - d3 * d2
        vb = d5 * d2 - d1 * d6
        va = d3 * d6 - d5 * d4
        if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
            v = d1 / (d1 - d3)
            px = ax + abx * v; py = ay + aby * v; pz = az + abz * v
        elif vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
            w = d2 / (d2 - d6)
            px = ax + acx * w; py = ay + acy * w; pz = az + acz * w
        elif va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
            w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            px = bx + (cx - bx) * w; py = by + (cy - by) * w; pz = bz + (cz - bz) * w
        else:
            denom = va + vb + vc
            if denom != 0.0:
                v = vb / denom
                w = vc / denom
            else:
                v = 0.0
                w = 0.0
            px = ax + abx * v + acx * w
            py = ay + aby * v + acy * w
            pz = az + abz * v + acz * w
    outx[0] = px; outy[0] = py; outz[0] = pz
    return ((px - qx) * (px - qx) + (py - qy) * (py - qy)
            + (pz - qz) * (pz - qz))


cdef inline double _box_dist_sq(double qx, double qy, double qz,
                                double mnx, double mny, double mnz,
                                double mxx, double mxy, double mxz) nogil:
    cdef double d = 0.0, t
    if qx < mnx:
        t = mnx - qx; d += t * t
    elif qx > mxx:
        t = qx - mxx; d += t * t
    if qy < mny:
        t = mny - qy; d += t * t
    elif qy > mxy:
        t = qy - mxy; d += t * t
    if qz < mnz:
        t = mnz - qz; d += t * t
    elif qz > mxz:
        t = qz - mxz; d += t * t
    return d


def closest_points(double[:, ::1] vertices, int[:, ::1] faces, bvh,
                   double[:, ::1] points):
    cdef double[:, ::1] bmin = bvh.bounds_min
    cdef double[:, ::1] bmax = bvh.bounds_max
    cdef int[::1] left = bvh.left
    cdef int[::1] right = bvh.right
    cdef int[::1] start = bvh.start
    cdef int[::1] count = bvh.count
    cdef int[::1] order = bvh.tri_order
    cdef Py_ssize_t nq = points.shape[0]
    d2_arr = np.empty(nq, dtype=np.float64)
    face_arr = np.empty(nq, dtype=np.int32)
    pt_arr = np.empty((nq, 3), dtype=np.float64)
    cdef double[::1] d2v = d2_arr
    cdef int[::1] facev = face_arr
    cdef double[:, ::1] ptv = pt_arr
    cdef int stack[STACK_CAP]
    cdef int sp, node, f, k, ch1, ch2
    cdef Py_ssize_t i
    cdef double qx, qy, qz, best, d, cxx, cyy, czz, d1, d2_
    cdef int bestf
    cdef double bpx, bpy, bpz
    for i in range(nq):
        qx = points[i, 0]
        qy = points[i, 1]
        qz = points[i, 2]
        best = 1e300
        bestf = -1
        bpx = 0.0; bpy = 0.0; bpz = 0.0
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_dist_sq(qx, qy, qz,
                            bmin[node, 0], bmin[node, 1], bmin[node, 2],
                            bmax[node, 0], bmax[node, 1], bmax[node, 2]) >= best:
                continue
            if left[node] < 0:
                for k in range(start[node], start[node] + count[node]):
                    f = order[k]
                    d = _closest_on_tri(
                        qx, qy, qz,
                        vertices[faces[f, 0], 0], vertices[faces[f, 0], 1], vertices[faces[f, 0], 2],
                        vertices[faces[f, 1], 0], vertices[faces[f, 1], 1], vertices[faces[f, 1], 2],
                        vertices[faces[f, 2], 0], vertices[faces[f, 2], 1], vertices[faces[f, 2], 2],
                        &cxx, &cyy, &czz)
                    if d < best:
                        best = d
                        bestf = f
                        bpx = cxx; bpy = cyy; bpz = czz
            else:
                ch1 = left[node]
                ch2 = right[node]
                d1 = _box_dist_sq(qx, qy, qz, bmin[ch1, 0], bmin[ch1, 1], bmin[ch1, 2],
                                  bmax[ch1, 0], bmax[ch1, 1], bmax[ch1, 2])
                d2_ = _box_dist_sq(qx, qy, qz, bmin[ch2, 0], bmin[ch2, 1], bmin[ch2, 2],
                                   bmax[ch2, 0], bmax[ch2, 1], bmax[ch2, 2])
                if sp + 2 <= STACK_CAP:
                    # push the farther child first so the nearer is popped first
                    if d1 <= d2_:
                        stack[sp] = ch2; sp += 1
                        stack[sp] = ch1; sp += 1
                    else:
                        stack[sp] = ch1; sp += 1
                        stack[sp] = ch2; sp += 1
        d2v[i] = best
        facev[i] = bestf
        ptv[i, 0] = bpx
        ptv[i, 1] = bpy
        ptv[i, 2] = bpz
    return d2_arr, face_arr, pt_arr


cdef inline void _cross3(double ax, double ay, double az,
                         double bx, double by, double bz,
                         double* ox, double* oy, double* oz) nogil:
    ox[0] = ay * bz - az * by
    oy[0] = az * bx - ax * bz
    oz[0] = ax * by - ay * bx


cdef bint _sat_axis(double ax, double ay, double az,
                    double* t1, double* t2, double scale_sq) nogil:
    """True if axis (ax,ay,az) strictly separates triangles t1/t2 (9 doubles each)."""
    cdef double n2 = ax * ax + ay * ay + az * az
    if n2 <= 1e-24 * scale_sq:
        return 0
    cdef double p, mn1, mx1, mn2, mx2
    cdef int v
    mn1 = 1e300; mx1 = -1e300
    for v in range(3):
        p = ax * t1[3 * v] + ay * t1[3 * v + 1] + az * t1[3 * v + 2]
        if p < mn1:
            mn1 = p
        if p > mx1:
            mx1 = p
    mn2 = 1e300; mx2 = -1e300
    for v in range(3):
        p = ax * t2[3 * v] + ay * t2[3 * v + 1] + az * t2[3 * v + 2]
        if p < mn2:
            mn2 = p
        if p > mx2:
            mx2 = p
    return mx1 < mn2 or mx2 < mn1


def tri_pairs_intersect(double[:, ::1] va, int[:, ::1] fa,
                        double[:, ::1] vb, int[:, ::1] fb,
                        pairs):
    pairs_arr = np.ascontiguousarray(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    cdef long long[:, ::1] pv = pairs_arr
    cdef Py_ssize_t k = pv.shape[0]
    out_arr = np.zeros(k, dtype=bool)
    cdef cnp.uint8_t[::1] out = out_arr.view(np.uint8)
    cdef double t1[9]
    cdef double t2[9]
    cdef double e1[9]
    cdef double e2[9]
    cdef double n1x, n1y, n1z, n2x, n2y, n2z, axx, axy, axz
    cdef double scale_sq, s
    cdef Py_ssize_t i
    cdef int v, j, a_, b_
    cdef bint separated
    for i in range(k):
        a_ = <int> pv[i, 0]
        b_ = <int> pv[i, 1]
        for v in range(3):
            t1[3 * v] = va[fa[a_, v], 0]
            t1[3 * v + 1] = va[fa[a_, v], 1]
            t1[3 * v + 2] = va[fa[a_, v], 2]
            t2[3 * v] = vb[fb[b_, v], 0]
            t2[3 * v + 1] = vb[fb[b_, v], 1]
            t2[3 * v + 2] = vb[fb[b_, v], 2]
        scale_sq = 0.0
        for v in range(9):
            scale_sq += t1[v] * t1[v] + t2[v] * t2[v]
        if scale_sq < 1.0:
            scale_sq = 1.0
        for v in range(3):
            j = (v + 1) % 3
            e1[3 * v] = t1[3 * j] - t1[3 * v]
            e1[3 * v + 1] = t1[3 * j + 1] - t1[3 * v + 1]
            e1[3 * v + 2] = t1[3 * j + 2] - t1[3 * v + 2]
            e2[3 * v] = t2[3 * j] - t2[3 * v]
            e2[3 * v + 1] = t2[3 * j + 1] - t2[3 * v + 1]
            e2[3 * v + 2] = t2[3 * j + 2] - t2[3 * v + 2]
        _cross3(e1[0], e1[1], e1[2], e1[3], e1[4], e1[5], &n1x, &n1y, &n1z)
        _cross3(e2[0], e2[1], e2[2], e2[3], e2[4], e2[5], &n2x, &n2y, &n2z)
        separated = _sat_axis(n1x, n1y, n1z, t1, t2, scale_sq)
        if not separated:
            separated = _sat_axis(n2x, n2y, n2z, t1, t2, scale_sq)
        if not separated:
            for v in range(3):
                if separated:
                    break
                for j in range(3):
                    _cross3(e1[3 * v], e1[3 * v + 1], e1[3 * v + 2],
                            e2[3 * j], e2[3 * j + 1], e2[3 * j + 2],
                            &axx, &axy, &axz)
                    if _sat_axis(axx, axy, axz, t1, t2, scale_sq):
                        separated = 1
                        break
        if not separated:
            for v in range(3):
                _cross3(n1x, n1y, n1z, e1[3 * v], e1[3 * v + 1], e1[3 * v + 2],
                        &axx, &axy, &axz)
                if _sat_axis(axx, axy, axz, t1, t2, scale_sq):
                    separated = 1
                    break
        if not separated:
            for v in range(3):
                _cross3(n2x, n2y, n2z, e2[3 * v], e2[3 * v + 1], e2[3 * v + 2],
                        &axx, &axy, &axz)
                if _sat_axis(axx, axy, axz, t1, t2, scale_sq):
                    separated = 1
                    break
        out[i] = not separated
    return out_arr
