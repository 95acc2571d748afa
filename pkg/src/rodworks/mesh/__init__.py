"""Triangle-mesh kernel: primitives, transforms, hulls, booleans, queries."""

from .boolean import boolean, difference, union, union_all
from .hull import convex_hull
from .intersect import intersect_meshes, points_inside, self_intersects
from .stl import export_obj, export_stl, import_stl
from .trimesh import (
    Affine,
    TriMesh,
    canonical_form,
    concat,
    cross_matrix,
    empty_mesh,
    face_areas,
    face_normals,
    is_solid,
    mass_properties,
    prism_base_ring,
    prism_top_ring,
    regular_polygon_area,
    require_solid,
    rotation_to,
    signed_volume,
    solid_problems,
    transform,
    unit_prism,
    weld,
)

__all__ = [
    "Affine",
    "TriMesh",
    "boolean",
    "canonical_form",
    "concat",
    "convex_hull",
    "cross_matrix",
    "difference",
    "empty_mesh",
    "export_obj",
    "export_stl",
    "face_areas",
    "face_normals",
    "import_stl",
    "intersect_meshes",
    "is_solid",
    "mass_properties",
    "points_inside",
    "prism_base_ring",
    "prism_top_ring",
    "regular_polygon_area",
    "require_solid",
    "rotation_to",
    "self_intersects",
    "signed_volume",
    "solid_problems",
    "transform",
    "union",
    "union_all",
    "unit_prism",
    "weld",
]
