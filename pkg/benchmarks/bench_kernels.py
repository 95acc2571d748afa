#!/usr/bin/env python3
"""Compare the compiled kernel backend against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from rodworks._kernels import BACKEND, build_bvh, fallback
from rodworks.mesh.trimesh import Affine, transform, unit_prism


def timed(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    if BACKEND != "compiled":
        print("compiled backend not available; build the extension first")
        return

    from rodworks._kernels import _core as core

    scale = 0.25 if args.quick else 1.0
    mesh = transform(unit_prism(32), Affine.scale(20, 20, 120))
    v, f = mesh.vertices, mesh.faces
    bvh = build_bvh(v, f)
    rng = np.random.default_rng(0)

    n_pts = int(20000 * scale)
    pts = np.ascontiguousarray(rng.uniform(-30, 150, (n_pts, 3)))
    n_rays = int(200000 * scale)
    origins = np.ascontiguousarray(rng.uniform(-30, 150, (n_rays, 3)))
    dirs = rng.normal(size=(n_rays, 3))
    dirs = np.ascontiguousarray(dirs / np.linalg.norm(dirs, axis=1, keepdims=True))

    rows = []

    t_c, w_c = timed(core.winding_numbers, v, f, pts)
    t_p, w_p = timed(fallback.winding_numbers, v, f, pts, repeat=1)
    assert np.allclose(w_c, w_p, atol=1e-9)
    rows.append(("winding_numbers", f"{n_pts} pts x {len(f)} tris", t_c, t_p))

    t_c, h_c = timed(core.ray_any_hits, v, f, bvh, origins, dirs, 1e-9)
    t_p, h_p = timed(fallback.ray_any_hits, v, f, bvh, origins, dirs, 1e-9, repeat=1)
    assert np.array_equal(h_c, h_p)
    rows.append(("ray_any_hits", f"{n_rays} rays x {len(f)} tris", t_c, t_p))

    t_c, c_c = timed(core.closest_points, v, f, bvh, pts)
    t_p, c_p = timed(fallback.closest_points, v, f, bvh, pts, repeat=1)
    assert np.allclose(c_c[0], c_p[0], atol=1e-9)
    rows.append(("closest_points", f"{n_pts} pts x {len(f)} tris", t_c, t_p))

    n_pairs = int(len(f) ** 2 * scale)
    pairs = np.ascontiguousarray(
        rng.integers(0, len(f), size=(n_pairs, 2)), dtype=np.int64
    )
    other = transform(mesh, Affine.translate((5.0, 3.0, 11.0)))
    t_c, x_c = timed(core.tri_pairs_intersect, v, f, other.vertices, other.faces, pairs)
    t_p, x_p = timed(
        fallback.tri_pairs_intersect, v, f, other.vertices, other.faces, pairs, repeat=1
    )
    assert np.array_equal(x_c, x_p)
    rows.append(("tri_pairs_intersect", f"{n_pairs} pairs", t_c, t_p))

    n_s = int(4000 * scale)
    rays = 64
    tri_pts = mesh.triangles()[rng.integers(0, len(f), n_s)]
    pos = np.ascontiguousarray(tri_pts.mean(axis=1))
    nrm = np.cross(tri_pts[:, 1] - tri_pts[:, 0], tri_pts[:, 2] - tri_pts[:, 0])
    nrm = np.ascontiguousarray(nrm / np.linalg.norm(nrm, axis=1, keepdims=True))
    tan = tri_pts[:, 1] - tri_pts[:, 0]
    tan = np.ascontiguousarray(tan / np.linalg.norm(tan, axis=1, keepdims=True))
    u1 = rng.random((n_s, rays))
    u2 = rng.random((n_s, rays))
    t_c, a_c = timed(core.ao_hit_fractions, v, f, bvh, pos, nrm, tan, u1, u2, 1e-4)
    t_p, a_p = timed(fallback.ao_hit_fractions, v, f, bvh, pos, nrm, tan, u1, u2, 1e-4, repeat=1)
    assert np.allclose(a_c, a_p, atol=1e-12)
    rows.append(("ao_hit_fractions", f"{n_s} samples x {rays} rays", t_c, t_p))

    print(f"{'kernel':<22}{'workload':<28}{'compiled':>10}{'python':>10}{'speedup':>9}")
    for name, workload, t_c, t_p in rows:
        print(f"{name:<22}{workload:<28}{t_c:>9.3f}s{t_p:>9.3f}s{t_p / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
