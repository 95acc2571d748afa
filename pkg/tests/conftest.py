"""Shared fixtures: networks, parameters and mesh helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rodworks.mesh.trimesh import TriMesh
from rodworks.model import EdgeNetwork, FabricationParams


def box_mesh(lo, hi) -> TriMesh:
    """Axis-aligned solid box."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    unit = np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 2, 1], [0, 3, 2],
            [4, 5, 6], [4, 6, 7],
            [0, 1, 5], [0, 5, 4],
            [1, 2, 6], [1, 6, 5],
            [2, 3, 7], [2, 7, 6],
            [3, 0, 4], [3, 4, 7],
        ],
        dtype=np.int32,
    )
    return TriMesh(unit * (hi - lo) + lo, faces)


def default_params(**overrides) -> FabricationParams:
    base = dict(
        rod_radius=3.0,
        profile_sides=8,
        joint_thickness=2.0,
        socket_length=12.0,
        tolerance=0.15,
        stock_length=1000.0,
        stock_end_padding=10.0,
    )
    base.update(overrides)
    return FabricationParams(**base)


def tetra_network(side_scale: float = 150.0) -> EdgeNetwork:
    verts = np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=np.float64
    ) * (side_scale / 2.0)
    edges = tuple((i, j) for i in range(4) for j in range(i + 1, 4))
    return EdgeNetwork(verts, edges)


def cube_network(side: float = 300.0) -> EdgeNetwork:
    verts = []
    for z in (0.0, side):
        for x, y in ((0, 0), (side, 0), (side, side), (0, side)):
            verts.append([x, y, z])
    edges = []
    for k in range(4):
        edges.append((k, (k + 1) % 4))  # bottom square
        edges.append((4 + k, 4 + (k + 1) % 4))  # top square
        edges.append((k, 4 + k))  # verticals
    return EdgeNetwork(np.asarray(verts, dtype=np.float64), tuple(edges))


def stub_network(length: float = 120.0) -> EdgeNetwork:
    return EdgeNetwork(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, length]]), ((0, 1),))


def three_way_network(length: float = 150.0) -> EdgeNetwork:
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    verts = np.array(
        [[0, 0, 0], [length, 0, 0], [length * c, length * s, 0], [length * c, -length * s, 0]]
    )
    return EdgeNetwork(verts, ((0, 1), (0, 2), (0, 3)))


def acute_pair_network(angle_deg: float = 16.0, length: float = 300.0) -> EdgeNetwork:
    a = math.radians(angle_deg)
    verts = np.array(
        [[0, 0, 0], [0, 0, length], [length * math.sin(a), 0, length * math.cos(a)]]
    )
    return EdgeNetwork(verts, ((0, 1), (0, 2)))


def frame_28_52(seed: int = 11) -> EdgeNetwork:
    """Deterministic connected network with 28 nodes and 52 edges.

    Nodes sit on a jittered spherical spiral; edges are chosen shortest
    first under a minimum-incident-angle filter, seeded by a spanning tree,
    so every joint stays printable with the default parameters.
    """
    rng = np.random.default_rng(seed)
    n = 28
    radius = 420.0
    pts = []
    golden = math.pi * (3.0 - math.sqrt(5.0))
    for i in range(n):
        z = 1.0 - 2.0 * (i + 0.5) / n
        rho = math.sqrt(max(1.0 - z * z, 0.0))
        th = golden * i
        p = np.array([rho * math.cos(th), rho * math.sin(th), z]) * radius
        pts.append(p + rng.normal(0.0, 14.0, 3))
    pts = np.asarray(pts)
    pts[:, 2] -= pts[:, 2].min()  # rest on the ground

    min_cos = math.cos(math.radians(30.0))
    candidates = sorted(
        ((np.linalg.norm(pts[i] - pts[j]), i, j) for i in range(n) for j in range(i + 1, n)),
        key=lambda t: t[0],
    )

    def angle_ok(edges, i, j):
        w = (pts[j] - pts[i]) / np.linalg.norm(pts[j] - pts[i])
        for a, b in edges:
            for shared, other in ((a, b), (b, a)):
                if shared == i:
                    wo = (pts[other] - pts[shared]) / np.linalg.norm(pts[other] - pts[shared])
                    if float(w @ wo) > min_cos:
                        return False
                elif shared == j:
                    wo = (pts[other] - pts[shared]) / np.linalg.norm(pts[other] - pts[shared])
                    if float((-w) @ wo) > min_cos:
                        return False
        return True

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    # spanning tree first (shortest usable connections)
    for dist, i, j in candidates:
        if len(edges) == n - 1:
            break
        if find(i) != find(j) and angle_ok(edges, i, j):
            parent[find(i)] = find(j)
            edges.append((i, j))
    # densify to 52
    for dist, i, j in candidates:
        if len(edges) == 52:
            break
        e = (min(i, j), max(i, j))
        if e in [(min(a, b), max(a, b)) for a, b in edges]:
            continue
        if angle_ok(edges, i, j):
            edges.append((i, j))
    if len(edges) != 52:
        raise RuntimeError(f"frame generator produced {len(edges)} edges")
    return EdgeNetwork(pts, tuple(edges))


@pytest.fixture
def params():
    return default_params()


@pytest.fixture
def tetra():
    return tetra_network()


@pytest.fixture
def cube():
    return cube_network()
