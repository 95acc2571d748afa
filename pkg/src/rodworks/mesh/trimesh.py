"""Indexed triangle meshes, affine maps and solid-mesh primitives.

Conventions: coordinates in millimeters, faces counter-clockwise when seen
from outside (outward normals), densities in kg/m³.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidSides, NotSolid


@dataclass(frozen=True)
class TriMesh:
    """Triangle mesh: (n,3) float64 vertices, (m,3) int32 faces."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int32).reshape(-1, 3))
        if not v.flags.writeable:  # e.g. np.frombuffer; kernels need writable views
            v = v.copy()
        if not f.flags.writeable:
            f = f.copy()
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def triangles(self) -> np.ndarray:
        """(m, 3, 3) corner coordinates."""
        return self.vertices[self.faces]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.vertices) == 0:
            z = np.zeros(3)
            return z, z
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))


def empty_mesh() -> TriMesh:
    return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32))


@dataclass(frozen=True)
class Affine:
    """Affine map x ↦ linear·x + translation."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.isfinite(lin).all() and np.isfinite(t).all()):
            raise ValueError("affine entries must be finite")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Affine":
        return Affine(np.eye(3), np.zeros(3))

    @staticmethod
    def from_rotation(rot, translation=(0.0, 0.0, 0.0)) -> "Affine":
        return Affine(rot, translation)

    @staticmethod
    def translate(offset) -> "Affine":
        return Affine(np.eye(3), offset)

    @staticmethod
    def scale(sx: float, sy: float, sz: float) -> "Affine":
        return Affine(np.diag([sx, sy, sz]), np.zeros(3))

    def __matmul__(self, other: "Affine") -> "Affine":
        """Composition: (self @ other)(x) == self(other(x))."""
        return Affine(
            self.linear @ other.linear,
            self.linear @ other.translation + self.translation,
        )

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.linear.T + self.translation


def transform(mesh: TriMesh, affine: Affine) -> TriMesh:
    """Apply an affine map; reverses winding when the map is orientation-flipping."""
    verts = affine.apply(mesh.vertices)
    faces = mesh.faces
    if np.linalg.det(affine.linear) < 0:
        faces = faces[:, ::-1]
    return TriMesh(verts, faces)


def rotation_to(w) -> np.ndarray:
    """Rotation R with R·e_z = ŵ, built from the cross-product matrix of e_z×ŵ.

    The antiparallel singularity (e_z·ŵ → −1) falls back to the
    deterministic 180° rotation about x, diag(1,−1,−1).
    """
    w = np.asarray(w, dtype=np.float64).reshape(3)
    n = np.linalg.norm(w)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"direction must be unit length, got |w|={n}")
    c = w[2]  # e_z · ŵ
    if c < -1.0 + 1e-8:
        return np.diag([1.0, -1.0, -1.0])
    v = np.array([-w[1], w[0], 0.0])  # e_z × ŵ
    k = cross_matrix(v)
    return np.eye(3) + k + (k @ k) / (1.0 + c)


def cross_matrix(x) -> np.ndarray:
    """Matrix [x]× with [x]×·y = x×y."""
    x = np.asarray(x, dtype=np.float64).reshape(3)
    return np.array(
        [
            [0.0, -x[2], x[1]],
            [x[2], 0.0, -x[0]],
            [-x[1], x[0], 0.0],
        ]
    )


def unit_prism(sides: int) -> TriMesh:
    """Solid prism: regular polygon inscribed in the unit circle, extruded z∈[0,1].

    Vertex layout is load-bearing for downstream bookkeeping: indices
    0..p-1 are the base ring (z=0), p..2p-1 the top ring (z=1), ring angle
    of vertex k is φ₀ + 2πk/p with φ₀ = π/p (an edge faces −y, so profiles
    sit flat).  Caps are triangle fans from vertices 0 and p.
    """
    p = int(sides)
    if p < 3:
        raise InvalidSides(f"profile needs at least 3 sides, got {p}")
    phi = np.pi / p + 2.0 * np.pi * np.arange(p) / p
    ring = np.column_stack([np.cos(phi), np.sin(phi), np.zeros(p)])
    verts = np.vstack([ring, ring + (0.0, 0.0, 1.0)])
    faces = []
    for k in range(1, p - 1):  # base cap, outward −z
        faces.append((0, k + 1, k))
    for k in range(1, p - 1):  # top cap, outward +z
        faces.append((p, p + k, p + k + 1))
    for k in range(p):  # sides, outward radial
        k1 = (k + 1) % p
        faces.append((k, k1, p + k1))
        faces.append((k, p + k1, p + k))
    return TriMesh(verts, np.array(faces, dtype=np.int32))


def prism_base_ring(sides: int) -> np.ndarray:
    """Vertex indices of the base ring of unit_prism(sides) — combinatorial constant."""
    return np.arange(int(sides), dtype=np.int32)


def prism_top_ring(sides: int) -> np.ndarray:
    p = int(sides)
    return np.arange(p, 2 * p, dtype=np.int32)


def regular_polygon_area(sides: int, radius: float = 1.0) -> float:
    """Area of a regular polygon inscribed in the given radius."""
    p = int(sides)
    return 0.5 * p * math.sin(2.0 * math.pi / p) * radius * radius


def signed_volume(mesh: TriMesh) -> float:
    """Signed enclosed volume via the divergence theorem."""
    if mesh.is_empty():
        return 0.0
    t = mesh.triangles()
    return float(np.einsum("mi,mi->m", t[:, 0], np.cross(t[:, 1], t[:, 2])).sum() / 6.0)


def mass_properties(mesh: TriMesh, density: float) -> tuple[float, float, np.ndarray]:
    """(volume mm³, mass kg, center of mass) for a solid mesh.

    density is in kg/m³; exact divergence-theorem integrals.
    """
    problems = solid_problems(mesh)
    if problems:
        raise NotSolid("; ".join(problems))
    if mesh.is_empty():
        return 0.0, 0.0, np.zeros(3)
    t = mesh.triangles()
    det = np.einsum("mi,mi->m", t[:, 0], np.cross(t[:, 1], t[:, 2]))
    volume = det.sum() / 6.0
    first_moment = (det[:, None] * t.sum(axis=1)).sum(axis=0) / 24.0
    com = first_moment / volume if volume != 0.0 else np.zeros(3)
    mass = density * volume * 1e-9  # mm³ → m³
    return float(volume), float(mass), com


def solid_problems(mesh: TriMesh, min_volume: float = 1e-9) -> list[str]:
    """Why this mesh is not a closed, manifold, positively oriented solid.

    Empty meshes pass (the empty solid).  Checks: finite coordinates, index
    range, degenerate faces, matched opposite half-edges (closed + manifold
    + consistently oriented in one test) and positive total signed volume.
    """
    if mesh.is_empty():
        return []
    problems = []
    if not np.isfinite(mesh.vertices).all():
        problems.append("non-finite vertex coordinates")
    if len(mesh.faces) and (mesh.faces.min() < 0 or mesh.faces.max() >= len(mesh.vertices)):
        problems.append("face index out of range")
        return problems
    f = mesh.faces
    if ((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])).any():
        problems.append("degenerate face (repeated vertex index)")
    halfedges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    he_keys = halfedges[:, 0].astype(np.int64) * len(mesh.vertices) + halfedges[:, 1]
    uniq, counts = np.unique(he_keys, return_counts=True)
    if (counts > 1).any():
        problems.append("duplicate half-edge (non-manifold or doubled face)")
    rev_keys = halfedges[:, 1].astype(np.int64) * len(mesh.vertices) + halfedges[:, 0]
    missing = np.setdiff1d(he_keys, rev_keys, assume_unique=False)
    if len(missing):
        problems.append(f"{len(missing)} boundary/unmatched half-edges")
    if not problems:
        vol = signed_volume(mesh)
        if vol <= min_volume:
            problems.append(f"non-positive enclosed volume {vol:.3e}")
    return problems


def is_solid(mesh: TriMesh) -> bool:
    return not solid_problems(mesh)


def require_solid(mesh: TriMesh, what: str = "mesh") -> None:
    problems = solid_problems(mesh)
    if problems:
        raise NotSolid(f"{what}: " + "; ".join(problems))


def concat(*meshes: TriMesh) -> TriMesh:
    """Disjoint union of meshes (no geometric merging)."""
    meshes = [m for m in meshes if not m.is_empty()]
    if not meshes:
        return empty_mesh()
    verts = []
    faces = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += len(m.vertices)
    return TriMesh(np.vstack(verts), np.vstack(faces))


def weld(mesh: TriMesh, tol: float) -> TriMesh:
    """Snap vertices to a grid of pitch tol, merge duplicates, drop slivers.

    Each grid cell is represented by the coordinates of its first occupant
    (input order), so welding never invents coordinates.
    """
    if mesh.is_empty():
        return mesh
    keys = np.round(mesh.vertices / tol).astype(np.int64)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    n_groups = inverse.max() + 1
    first = np.full(n_groups, len(mesh.vertices), dtype=np.int64)
    np.minimum.at(first, inverse, np.arange(len(mesh.vertices)))
    # new index = rank of the group's first occupant in input order
    order = np.argsort(first, kind="stable")
    rank = np.empty(n_groups, dtype=np.int64)
    rank[order] = np.arange(n_groups)
    new_verts = mesh.vertices[first[order]]
    remap = rank[inverse]
    faces = remap[mesh.faces]
    keep = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 2] != faces[:, 0])
    )
    return TriMesh(new_verts, faces[keep])


def canonical_form(mesh: TriMesh) -> TriMesh:
    """Deterministic vertex/face ordering (used to stabilize boolean output)."""
    if mesh.is_empty():
        return empty_mesh()
    used = np.unique(mesh.faces)
    verts = mesh.vertices[used]
    remap = np.zeros(len(mesh.vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    faces = remap[mesh.faces]
    order = np.lexsort((verts[:, 2], verts[:, 1], verts[:, 0]))
    rank = np.empty(len(verts), dtype=np.int64)
    rank[order] = np.arange(len(verts))
    verts = verts[order]
    faces = rank[faces]
    roll = np.argmin(faces, axis=1)
    cols = (np.arange(3)[None, :] + roll[:, None]) % 3
    faces = np.take_along_axis(faces, cols, axis=1)
    key = np.lexsort((faces[:, 2], faces[:, 1], faces[:, 0]))
    return TriMesh(verts, faces[key])


def face_normals(mesh: TriMesh, normalize: bool = True) -> np.ndarray:
    t = mesh.triangles()
    n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
    if normalize:
        lens = np.linalg.norm(n, axis=1, keepdims=True)
        lens[lens == 0] = 1.0
        n = n / lens
    return n


def face_areas(mesh: TriMesh) -> np.ndarray:
    t = mesh.triangles()
    return 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)
