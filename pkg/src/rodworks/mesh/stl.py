"""Binary STL export/import and a debug OBJ writer."""

from __future__ import annotations

import struct

import numpy as np

from ..errors import MalformedStl
from .trimesh import TriMesh, face_normals, require_solid

_HEADER = b"rodworks binary stl".ljust(80, b"\0")


def export_stl(mesh: TriMesh, path) -> None:
    """Write binary STL: 80-byte header, uint32 count, 50-byte facets.

    Facet normals are recomputed from the winding; coordinates are float32
    little-endian per the format.
    """
    require_solid(mesh, "stl export")
    normals = face_normals(mesh).astype("<f4")
    tris = mesh.triangles().astype("<f4")
    n = len(mesh.faces)
    record = np.zeros(n, dtype=_facet_dtype())
    record["normal"] = normals
    record["verts"] = tris
    with open(path, "wb") as fh:
        fh.write(_HEADER)
        fh.write(struct.pack("<I", n))
        fh.write(record.tobytes())


def import_stl(path) -> TriMesh:
    """Read binary STL; exact-duplicate coordinates are merged into shared vertices."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 84:
        raise MalformedStl(f"{path}: file shorter than binary STL header")
    (n,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * n
    if len(data) != expected:
        raise MalformedStl(
            f"{path}: expected {expected} bytes for {n} facets, found {len(data)}"
        )
    record = np.frombuffer(data, dtype=_facet_dtype(), count=n, offset=84)
    coords = record["verts"].reshape(-1, 3).astype(np.float64)
    uniq, inverse = np.unique(coords, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3).astype(np.int32)
    return TriMesh(uniq, faces)


def _facet_dtype():
    return np.dtype(
        [("normal", "<f4", (3,)), ("verts", "<f4", (3, 3)), ("attr", "<u2")]
    )


def export_obj(mesh: TriMesh, path) -> None:
    """ASCII OBJ with vertex/face lines only (debugging aid)."""
    with open(path, "w", encoding="ascii") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
