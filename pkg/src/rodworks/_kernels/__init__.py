"""Kernel backend selection.

The hot inner loops (winding numbers, ray casting, closest-point queries,
triangle-triangle tests) have two implementations: a compiled Cython
extension (`rodworks._kernels._core`) and a pure-numpy fallback
(`rodworks._kernels.fallback`).  The compiled backend is preferred when it
imports; set RODWORKS_KERNELS=python or =compiled to force one.

`benchmarks/bench_kernels.py` compares the two.
"""

from __future__ import annotations

import os

from .bvh import Bvh, build_bvh

__all__ = [
    "BACKEND",
    "Bvh",
    "build_bvh",
    "winding_numbers",
    "ray_any_hits",
    "ao_hit_fractions",
    "closest_points",
    "tri_pairs_intersect",
]

_requested = os.environ.get("RODWORKS_KERNELS", "").strip().lower()

if _requested in ("", "compiled", "auto"):
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import fallback as _impl

        BACKEND = "python"
elif _requested == "python":
    from . import fallback as _impl

    BACKEND = "python"
else:
    raise ValueError(f"unknown RODWORKS_KERNELS value: {_requested!r}")

winding_numbers = _impl.winding_numbers
ray_any_hits = _impl.ray_any_hits
ao_hit_fractions = _impl.ao_hit_fractions
closest_points = _impl.closest_points
tri_pairs_intersect = _impl.tri_pairs_intersect
