"""Automatic ID engraving: find a flat, visible spot and carve digits there.

The spot score combines local curvature (distance-weighted dihedral angles
around the k nearest surface samples) with ambient occlusion; the winner is
the argmin of the normalized sum.  Digits come from a built-in seven-segment
stroke font, extruded and subtracted from the joint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as kernels
from .errors import BooleanFailure, EngraveFailure, NotSolid
from .mesh.boolean import boolean
from .mesh.trimesh import TriMesh, face_areas, face_normals, require_solid

DIST_DELTA = 1e-6  # mm, guards 1/d weights at coincident samples
RAY_OFFSET = 1e-4  # mm, ray origins pushed off the surface


@dataclass(frozen=True)
class EngraveParams:
    id: str
    text_depth: float  # σ/2
    stroke_width: float  # σ/4
    sample_count: int = 10000
    k_neighbors: int = 200
    ao_rays: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.sample_count > self.k_neighbors:
            raise ValueError("sample_count must exceed k_neighbors")
        if self.k_neighbors < 2:
            raise ValueError("k_neighbors must be >= 2")
        if self.ao_rays < 8:
            raise ValueError("ao_rays must be >= 8")

    @staticmethod
    def for_joint(fab_params, node: int, **overrides) -> "EngraveParams":
        return EngraveParams(
            id=f"{node:02d}",
            text_depth=fab_params.joint_thickness / 2.0,
            stroke_width=fab_params.joint_thickness / 4.0,
            **overrides,
        )


@dataclass(frozen=True)
class SampleSet:
    """Surface samples with the quantities scored per sample."""

    positions: np.ndarray  # (n, 3)
    normals: np.ndarray  # (n, 3) unit
    faces: np.ndarray  # (n,) containing triangle per sample
    tangents: np.ndarray  # (n, 3) unit, from the containing triangle's first edge


def sample_surface(mesh: TriMesh, n: int, seed: int) -> SampleSet:
    """Area-weighted uniform surface sampling; reproducible for a seed.

    Tangents come from the containing triangle's first edge so the whole
    frame moves rigidly with the mesh (scores stay rigid-invariant).
    """
    rng = np.random.default_rng(seed)
    areas = face_areas(mesh)
    cum = np.cumsum(areas)
    total = cum[-1]
    picks = np.searchsorted(cum, rng.random(n) * total, side="right")
    picks = np.minimum(picks, len(areas) - 1)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    tri = mesh.triangles()[picks]
    pos = tri[:, 0] + u[:, None] * (tri[:, 1] - tri[:, 0]) + v[:, None] * (tri[:, 2] - tri[:, 0])
    normals = face_normals(mesh)[picks]
    edge = tri[:, 1] - tri[:, 0]
    lens = np.linalg.norm(edge, axis=1, keepdims=True)
    lens[lens == 0] = 1.0
    return SampleSet(pos, normals, picks.astype(np.int64), edge / lens)


def _face_edge_dihedrals(mesh: TriMesh) -> np.ndarray:
    """(m, 3) |dihedral| per face corner edge (vk, vk+1)."""
    normals = face_normals(mesh)
    f = mesh.faces
    pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    pairs = np.sort(pairs, axis=1)
    uniq, inverse, counts = np.unique(
        pairs, axis=0, return_inverse=True, return_counts=True
    )
    edge_n_sum = np.zeros((len(uniq), 3))
    np.add.at(edge_n_sum, inverse, np.tile(normals, (3, 1)))
    # for a manifold edge with unit normals n1+n2: |n1+n2|² = 2+2cosθ
    norm_sq = (edge_n_sum**2).sum(axis=1)
    cos = np.clip(norm_sq / 2.0 - 1.0, -1.0, 1.0)
    dihedral = np.arccos(cos)
    dihedral[counts != 2] = 0.0
    return dihedral[inverse].reshape(3, len(f)).T


def _sample_edge_feature(mesh: TriMesh, samples: SampleSet) -> np.ndarray:
    """Per sample: |dihedral| of the nearest edge of its containing triangle."""
    dihedrals = _face_edge_dihedrals(mesh)  # (m, 3)
    tri = mesh.triangles()[samples.faces]  # (n, 3, 3)
    p = samples.positions[:, None, :]
    a = tri  # edge k from corner k
    b = tri[:, [1, 2, 0], :]
    d = b - a
    L2 = (d**2).sum(axis=2)
    L2[L2 == 0] = 1.0
    t = np.clip(np.einsum("nki,nki->nk", p - a, d) / L2, 0.0, 1.0)
    foot = a + t[..., None] * d
    dist = np.linalg.norm(p - foot, axis=2)
    nearest = np.argmin(dist, axis=1)
    return dihedrals[samples.faces, nearest]


def curvature_scores(mesh: TriMesh, samples: SampleSet, k: int) -> np.ndarray:
    """Distance-weighted average of dihedral angles over the k nearest samples."""
    feature = _sample_edge_feature(mesh, samples)
    tree = cKDTree(samples.positions)
    dist, idx = tree.query(samples.positions, k=k + 1)
    dist, idx = dist[:, 1:], idx[:, 1:]  # drop self
    w = 1.0 / (dist + DIST_DELTA)
    return (w * feature[idx]).sum(axis=1) / w.sum(axis=1)


def occlusion_scores(mesh: TriMesh, samples: SampleSet, rays: int, seed: int) -> np.ndarray:
    """Fraction of cosine-weighted hemisphere rays that hit the mesh.

    Ray fans live in each sample's own tangent frame, so scores move
    rigidly with the mesh for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    n_s = len(samples.positions)
    u1 = rng.random((n_s, rays))
    u2 = rng.random((n_s, rays))
    bvh = kernels.build_bvh(mesh.vertices, mesh.faces)
    return kernels.ao_hit_fractions(
        mesh.vertices,
        mesh.faces,
        bvh,
        np.ascontiguousarray(samples.positions),
        np.ascontiguousarray(samples.normals),
        np.ascontiguousarray(samples.tangents),
        u1,
        u2,
        RAY_OFFSET,
    )


def _normalize(x: np.ndarray) -> np.ndarray:
    lo, hi = float(x.min()), float(x.max())
    if hi - lo < 1e-12:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def pick_spot(mesh: TriMesh, params: EngraveParams) -> tuple[int, SampleSet, np.ndarray, float]:
    """(winner index, samples, combined scores, radial extent)."""
    samples = sample_surface(mesh, params.sample_count, params.seed)
    curv = curvature_scores(mesh, samples, params.k_neighbors)
    occ = occlusion_scores(mesh, samples, params.ao_rays, params.seed + 1)
    combined = _normalize(curv) + _normalize(occ)
    winner = int(np.argmin(combined))
    tree = cKDTree(samples.positions)
    dist, _ = tree.query(samples.positions[winner], k=params.k_neighbors + 1)
    radial = float(dist[-1])
    return winner, samples, combined, radial


# seven-segment layout in glyph coordinates: 1 wide, 2 tall
_SEGMENTS = {
    "a": ((0.0, 2.0), (1.0, 2.0)),
    "b": ((1.0, 1.0), (1.0, 2.0)),
    "c": ((1.0, 0.0), (1.0, 1.0)),
    "d": ((0.0, 0.0), (1.0, 0.0)),
    "e": ((0.0, 0.0), (0.0, 1.0)),
    "f": ((0.0, 1.0), (0.0, 2.0)),
    "g": ((0.0, 1.0), (1.0, 1.0)),
}
_DIGITS = {
    "0": "abcdef",
    "1": "bc",
    "2": "abged",
    "3": "abgcd",
    "4": "fgbc",
    "5": "afgcd",
    "6": "afgcde",
    "7": "abc",
    "8": "abcdefg",
    "9": "abcdfg",
}
_GLYPH_GAP = 0.35  # in glyph units, between digit cells


def glyph_strokes(text: str) -> list[tuple[np.ndarray, np.ndarray]]:
    """2D stroke segments for a digit string, origin at layout center."""
    strokes = []
    width = len(text) + _GLYPH_GAP * (len(text) - 1)
    x0 = -width / 2.0
    for ch in text:
        if ch not in _DIGITS:
            raise ValueError(f"stroke font only covers digits, got {ch!r}")
        for seg in _DIGITS[ch]:
            (ax, ay), (bx, by) = _SEGMENTS[seg]
            strokes.append(
                (np.array([x0 + ax, ay - 1.0]), np.array([x0 + bx, by - 1.0]))
            )
        x0 += 1.0 + _GLYPH_GAP
    return strokes


def _stroke_box(
    a2: np.ndarray,
    b2: np.ndarray,
    scale: float,
    origin: np.ndarray,
    right: np.ndarray,
    up: np.ndarray,
    normal: np.ndarray,
    half_width: float,
    depth: float,
    overshoot: float,
) -> TriMesh:
    """Rectangular solid covering one stroke, surface-normal aligned."""
    a = origin + scale * (a2[0] * right + a2[1] * up)
    b = origin + scale * (b2[0] * right + b2[1] * up)
    axis = b - a
    ln = np.linalg.norm(axis)
    axis = axis / ln if ln > 0 else right
    side = np.cross(axis, normal)
    a = a - axis * half_width
    b = b + axis * half_width
    lo = -depth
    hi = overshoot
    corners = []
    for end in (a, b):
        for s in (-half_width, half_width):
            for z in (lo, hi):
                corners.append(end + s * side + z * normal)
    v = np.asarray(corners)
    faces = np.array(
        [
            [0, 2, 3], [0, 3, 1],
            [4, 7, 6], [4, 5, 7],
            [0, 1, 5], [0, 5, 4],
            [2, 6, 7], [2, 7, 3],
            [0, 4, 6], [0, 6, 2],
            [1, 3, 7], [1, 7, 5],
        ],
        dtype=np.int32,
    )
    mesh = TriMesh(v, faces)
    from .mesh.trimesh import signed_volume

    if signed_volume(mesh) < 0:
        mesh = TriMesh(v, faces[:, ::-1])
    return mesh


def text_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(right, up) for text on a surface: up is +z projected to the tangent
    plane, falling back to +x when the normal is (anti)parallel to z."""
    z = np.array([0.0, 0.0, 1.0])
    up = z - (z @ normal) * normal
    if np.linalg.norm(up) < 1e-6:
        x = np.array([1.0, 0.0, 0.0])
        up = x - (x @ normal) * normal
    up = up / np.linalg.norm(up)
    right = np.cross(up, normal)
    return right, up


def glyph_tool(
    text: str,
    scale: float,
    origin: np.ndarray,
    right: np.ndarray,
    up: np.ndarray,
    normal: np.ndarray,
    half_width: float,
    depth: float,
    overshoot: float,
) -> TriMesh:
    """One solid covering all strokes: 2D stroke-rectangle union, extruded.

    Shapely does the 2D union (robust, handles the hole in '0'); caps are
    ear-clipped, walls swept along the normal.
    """
    from shapely.geometry import Polygon as ShapelyPolygon
    from shapely.ops import unary_union

    from .mesh.boolean import _triangulate_polygon
    from .mesh.trimesh import concat, signed_volume

    rects = []
    for a2, b2 in glyph_strokes(text):
        axis = b2 - a2
        ln = float(np.linalg.norm(axis))
        axis = axis / ln if ln > 0 else np.array([1.0, 0.0])
        side = np.array([-axis[1], axis[0]])
        a = a2 - axis * (half_width / scale)
        b = b2 + axis * (half_width / scale)
        w = side * (half_width / scale)
        rects.append(ShapelyPolygon([a + w, b + w, b - w, a - w]))
    merged = unary_union(rects)
    polys = list(getattr(merged, "geoms", [merged]))

    def lift(p2, z):
        return origin + scale * (p2[0] * right + p2[1] * up) + z * normal

    from shapely.geometry.polygon import orient as shapely_orient

    pieces = []
    for poly in polys:
        poly = shapely_orient(poly, sign=1.0)  # CCW exterior, CW holes
        tris2d = _triangulate_polygon(poly, 1e-9)
        verts = []
        faces = []

        def emit(p0, p1, p2):
            base = len(verts)
            verts.extend([p0, p1, p2])
            faces.append((base, base + 1, base + 2))

        for t2 in tris2d:
            # top cap (outward +normal at z=overshoot), bottom at -depth
            emit(lift(t2[0], overshoot), lift(t2[1], overshoot), lift(t2[2], overshoot))
            emit(lift(t2[0], -depth), lift(t2[2], -depth), lift(t2[1], -depth))
        rings = [list(poly.exterior.coords)[:-1]] + [
            list(r.coords)[:-1] for r in poly.interiors
        ]
        for ring in rings:
            for i in range(len(ring)):
                a2, b2 = np.asarray(ring[i]), np.asarray(ring[(i + 1) % len(ring)])
                a_top, b_top = lift(a2, overshoot), lift(b2, overshoot)
                a_bot, b_bot = lift(a2, -depth), lift(b2, -depth)
                emit(a_bot, b_bot, b_top)
                emit(a_bot, b_top, a_top)
        mesh = TriMesh(np.asarray(verts), np.asarray(faces, dtype=np.int32))
        from .mesh.trimesh import weld as weld_mesh

        mesh = weld_mesh(mesh, 1e-9)
        if signed_volume(mesh) < 0:
            mesh = TriMesh(mesh.vertices, mesh.faces[:, ::-1])
        pieces.append(mesh)
    return concat(*pieces)


def place_engraving(mesh: TriMesh, params: EngraveParams) -> TriMesh:
    """Carve the ID into the best-scoring spot; returns the engraved solid."""
    winner, samples, _, radial = pick_spot(mesh, params)
    pos = samples.positions[winner]
    normal = samples.normals[winner]
    right, up = text_frame(normal)
    n_digits = len(params.id)
    layout_w = n_digits + _GLYPH_GAP * (n_digits - 1)
    half_diag = float(np.hypot(layout_w / 2.0, 1.0))
    scale = radial / half_diag if half_diag > 0 else radial
    overshoot = max(params.text_depth, 0.5)
    last = None
    for attempt in range(3):
        depth = params.text_depth + attempt * 1e-5
        try:
            tool = glyph_tool(
                params.id, scale, pos, right, up, normal,
                params.stroke_width / 2.0, depth, overshoot,
            )
            require_solid(tool, "glyph tool")
            return boolean("difference", mesh, tool)
        except (BooleanFailure, NotSolid) as exc:
            last = exc
    raise EngraveFailure(f"engraving {params.id} failed: {last}")
