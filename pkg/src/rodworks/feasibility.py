"""Global design diagnostics: rod-rod intersections, balance, problem flags."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAngle, NoGroundContact, RodworksError, SwallowedEdge
from .joints import (
    build_all_joints,
    derive_all,
    detect_degenerate_nodes,
    detect_swallowed,
    rod_solid,
)
from .mesh.intersect import intersect_meshes
from .mesh.trimesh import mass_properties
from .model import EdgeNetwork, FabricationParams

CONTACT_TOL = 1.0  # mm of z-slack counted as touching the ground
BROAD_INFLATE = 1e-6  # mm AABB inflation in the broad phase


@dataclass(frozen=True)
class BalanceReport:
    total_mass: float | None
    com: np.ndarray | None
    com_ground: np.ndarray | None
    support_polygon: np.ndarray | None  # (k, 2) convex, counter-clockwise
    stable: bool | None  # None = unknown (joints not buildable)
    margin: float | None  # signed distance to polygon boundary, + inside

    def to_dict(self) -> dict:
        return {
            "total_mass": self.total_mass,
            "com": None if self.com is None else [float(x) for x in self.com],
            "com_ground": None
            if self.com_ground is None
            else [float(x) for x in self.com_ground],
            "support_polygon": None
            if self.support_polygon is None
            else [[float(a), float(b)] for a, b in self.support_polygon],
            "stable": self.stable,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class Diagnostics:
    intersecting_edge_pairs: frozenset
    swallowed_edges: frozenset
    degenerate_nodes: frozenset
    balance: BalanceReport
    notes: tuple = field(default_factory=tuple)

    def feasible(self) -> bool:
        return (
            not self.intersecting_edge_pairs
            and not self.swallowed_edges
            and not self.degenerate_nodes
            and self.balance.stable is not False
        )

    def to_dict(self) -> dict:
        return {
            "intersecting_edge_pairs": sorted(
                [sorted(map(list, pair)) for pair in self.intersecting_edge_pairs]
            ),
            "swallowed_edges": sorted(map(list, self.swallowed_edges)),
            "degenerate_nodes": sorted(self.degenerate_nodes),
            "balance": self.balance.to_dict(),
            "notes": list(self.notes),
            "feasible": self.feasible(),
        }


def detect_rod_intersections(net: EdgeNetwork, params: FabricationParams) -> set:
    """Pairs of node-disjoint edges whose rod solids intersect.

    Edges sharing a node are excluded: local safety there is the offsets'
    job.  AABB broad phase, then the mesh-mesh test.
    """
    derived = derive_all(net, params)
    rods = {}
    boxes = {}
    for e, d in derived.items():
        if d.swallowed:
            continue
        try:
            rods[e] = rod_solid(net, params, e, d)
        except SwallowedEdge:
            continue
        lo, hi = rods[e].bounds()
        boxes[e] = (lo - BROAD_INFLATE, hi + BROAD_INFLATE)
    out = set()
    keys = sorted(rods.keys())
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            ea, eb = keys[a], keys[b]
            if set(ea) & set(eb):
                continue
            lo_a, hi_a = boxes[ea]
            lo_b, hi_b = boxes[eb]
            if (hi_a < lo_b).any() or (hi_b < lo_a).any():
                continue
            if intersect_meshes(rods[ea], rods[eb]):
                out.add(frozenset((ea, eb)))
    return out


def balance_check(
    net: EdgeNetwork, params: FabricationParams, parts: list | None = None
) -> BalanceReport:
    """Projected-center-of-mass vs support-polygon stability.

    parts may carry prebuilt (kind, mesh) pairs ("joint"/"rod") to avoid
    rebuilding; otherwise joints and rods are constructed here.
    """
    if parts is None:
        parts = collect_parts(net, params)
    masses = []
    moments = []
    contacts = []
    min_z = min(float(mesh.vertices[:, 2].min()) for _, mesh in parts)
    for kind, mesh in parts:
        density = params.plastic_density if kind == "joint" else params.wood_density
        _, mass, com = mass_properties(mesh, density)
        masses.append(mass)
        moments.append(mass * com)
        verts = mesh.vertices
        touching = verts[verts[:, 2] <= min_z + CONTACT_TOL]
        if len(touching):
            contacts.append(touching[:, :2])
    total = float(sum(masses))
    com = np.sum(moments, axis=0) / total
    contact_pts = np.vstack(contacts)
    hull2d = _convex_hull_2d(contact_pts)
    if hull2d is None:
        raise NoGroundContact("fewer than 3 non-collinear ground contact points")
    com_ground = com[:2]
    margin = _signed_distance_to_polygon(com_ground, hull2d)
    return BalanceReport(
        total_mass=total,
        com=com,
        com_ground=com_ground,
        support_polygon=hull2d,
        stable=bool(margin >= 0.0),
        margin=float(margin),
    )


def collect_parts(net: EdgeNetwork, params: FabricationParams, jobs: int = 1) -> list:
    """(kind, mesh) for every joint and rod in the design."""
    parts = [("joint", js.mesh) for js in build_all_joints(net, params, jobs=jobs)]
    derived = derive_all(net, params)
    for e in net.edges:
        parts.append(("rod", rod_solid(net, params, e, derived[e])))
    return parts


def _convex_hull_2d(points: np.ndarray) -> np.ndarray | None:
    """Counter-clockwise 2D convex hull (monotone chain); None if degenerate."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) < 3:
        return None
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(tuple(p))
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(tuple(p))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return None
    return np.asarray(hull)


def _signed_distance_to_polygon(q: np.ndarray, poly: np.ndarray) -> float:
    """Positive inside a CCW convex polygon, negative outside."""
    n = len(poly)
    inside = True
    best = np.inf
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        e = b - a
        to_q = q - a
        cross = e[0] * to_q[1] - e[1] * to_q[0]
        if cross < 0:
            inside = False
        t = np.clip(np.dot(to_q, e) / np.dot(e, e), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(q - (a + t * e))))
    return best if inside else -best


def diagnose(net: EdgeNetwork, params: FabricationParams) -> Diagnostics:
    """Aggregate all detectors; never raises so the UI can show broken states."""
    notes = []
    try:
        swallowed = frozenset(detect_swallowed(net, params))
    except RodworksError as exc:
        swallowed = frozenset()
        notes.append(f"swallow check failed: {exc}")
    try:
        degenerate = frozenset(detect_degenerate_nodes(net, params))
    except RodworksError as exc:
        degenerate = frozenset()
        notes.append(f"degenerate check failed: {exc}")
    try:
        pairs = frozenset(detect_rod_intersections(net, params))
    except RodworksError as exc:
        pairs = frozenset()
        notes.append(f"intersection check failed: {exc}")
    try:
        balance = balance_check(net, params)
    except (RodworksError, ValueError) as exc:
        balance = BalanceReport(None, None, None, None, None, None)
        notes.append(f"balance unknown: {exc}")
    return Diagnostics(
        intersecting_edge_pairs=pairs,
        swallowed_edges=swallowed,
        degenerate_nodes=degenerate,
        balance=balance,
        notes=tuple(notes),
    )
