"""Joint and rod solid generation.

Per edge-end offsets keep rods from colliding at nodes; sockets, hulls and
cavities combine into one printable solid per node.  All constructions run
in the canonical edge frame (tip = lower node index), which is what keeps
polygonal profiles twist-free between the two ends of an edge.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import BooleanFailure, DegenerateAngle, DegenerateHull, SwallowedEdge
from .mesh.boolean import boolean
from .mesh.hull import convex_hull
from .mesh.trimesh import (
    Affine,
    TriMesh,
    prism_base_ring,
    prism_top_ring,
    transform,
    unit_prism,
)
from .model import EdgeNetwork, FabricationParams, canonical_edge_frame

PARALLEL_COS = 1.0 - 1e-6


@dataclass(frozen=True)
class DerivedEdgeData:
    """Per-edge geometry derived from the network and parameters."""

    edge: tuple
    tip: int
    tail: int
    direction: np.ndarray  # unit, tip -> tail
    length: float  # node-to-node distance
    offset_tip: float  # g at the tip end
    offset_tail: float  # g at the tail end
    min_cos_tip: float | None
    min_cos_tail: float | None
    placement: Affine  # canonical frame -> world
    swallowed: bool

    @property
    def rod_length(self) -> float:
        return self.length - self.offset_tip - self.offset_tail

    def offset_at(self, node: int) -> float:
        return self.offset_tip if node == self.tip else self.offset_tail


@dataclass(frozen=True)
class SocketPiece:
    """One socket sleeve, plus the outlet vertex ring used for hulling."""

    mesh: TriMesh
    outlet_vertices: np.ndarray  # indices into mesh.vertices, combinatorial
    node: int
    edge: tuple


@dataclass(frozen=True)
class JointSolid:
    node: int
    mesh: TriMesh
    print_rotation: np.ndarray

    def id_string(self) -> str:
        return f"{self.node:02d}"


def compute_min_cos(net: EdgeNetwork, node: int, edge) -> float | None:
    """Largest dot product between this edge and the node's other edges.

    None at valence-1 nodes (nothing to collide with)."""
    e = (min(edge), max(edge))
    _, _, w, _ = canonical_edge_frame(net, e)
    if node == max(e):
        w = -w
    best = None
    for other in net.incident_edges(node):
        if other == e:
            continue
        _, _, wo, _ = canonical_edge_frame(net, other)
        if node == max(other):
            wo = -wo
        d = float(w @ wo)
        if best is None or d > best:
            best = d
    return best


def safe_offset(c: float | None, r: float, eps: float) -> float:
    """Socket start distance from the node via the tangent half-angle formula.

    g = (r+eps)·sqrt((1+c)/(1-c)); valence-1 (c is None) starts at the node.
    """
    if c is None:
        return 0.0
    if c >= PARALLEL_COS:
        raise DegenerateAngle(f"incident edges are (near) parallel, cos={c}")
    return (r + eps) * math.sqrt((1.0 + c) / (1.0 - c))


def derive_edge(net: EdgeNetwork, params: FabricationParams, edge) -> DerivedEdgeData:
    """Offsets, placement and swallow flag for one edge.

    Offsets use clearance r+|eps|: a negative (friction-fit) tolerance
    shrinks the cavity but must not shrink the collision guarantee for the
    physical rod of radius r.
    """
    e = (min(edge), max(edge))
    tip, tail, w, length = canonical_edge_frame(net, e)
    c_tip = compute_min_cos(net, tip, e)
    c_tail = compute_min_cos(net, tail, e)
    clearance_eps = abs(params.tolerance)
    g_tip = safe_offset(c_tip, params.rod_radius, clearance_eps)
    g_tail = safe_offset(c_tail, params.rod_radius, clearance_eps)
    h = params.socket_length
    swallowed = g_tip + g_tail + 2.0 * h > length
    placement = Affine.from_rotation(_rotation_for(w), net.nodes[tip])
    return DerivedEdgeData(
        edge=e,
        tip=tip,
        tail=tail,
        direction=w,
        length=length,
        offset_tip=g_tip,
        offset_tail=g_tail,
        min_cos_tip=c_tip,
        min_cos_tail=c_tail,
        placement=placement,
        swallowed=swallowed,
    )


def _rotation_for(w: np.ndarray) -> np.ndarray:
    from .mesh.trimesh import rotation_to

    return rotation_to(w)


def derive_all(net: EdgeNetwork, params: FabricationParams) -> dict:
    """DerivedEdgeData for every edge, keyed by canonical edge."""
    return {e: derive_edge(net, params, e) for e in net.edges}


def detect_swallowed(net: EdgeNetwork, params: FabricationParams) -> set:
    """Edges whose two sockets would overlap mid-rod: g_ij + g_ji + 2h > length."""
    out = set()
    for e in net.edges:
        try:
            d = derive_edge(net, params, e)
        except DegenerateAngle:
            continue  # reported separately by diagnostics
        if d.swallowed:
            out.add(e)
    return out


def node_is_degenerate(net: EdgeNetwork, node: int) -> bool:
    """Whether an incident edge pair is (near) parallel or butts head-on."""
    dirs = []
    for e in net.incident_edges(node):
        _, _, w, _ = canonical_edge_frame(net, e)
        if node == max(e):
            w = -w
        dirs.append(w)
    for a in range(len(dirs)):
        for b in range(a + 1, len(dirs)):
            d = float(dirs[a] @ dirs[b])
            if d >= PARALLEL_COS:
                return True
            if d <= -PARALLEL_COS and len(dirs) == 2:
                # straight-through node: both offsets vanish and the rods
                # would butt cap-to-cap at the node
                return True
    return False


def detect_degenerate_nodes(net: EdgeNetwork, params: FabricationParams) -> set:
    """Nodes where an incident edge pair is (near) parallel or butts head-on."""
    del params
    return {i for i in range(net.n_nodes) if node_is_degenerate(net, i)}


def _scaled_prism(params, radial: float, axial: float, z0: float, placement: Affine) -> TriMesh:
    mesh = unit_prism(params.effective_sides())
    local = Affine.translate((0.0, 0.0, z0)) @ Affine.scale(radial, radial, axial)
    return transform(mesh, placement @ local)


def socket_pieces(
    net: EdgeNetwork, params: FabricationParams, edge, derived: DerivedEdgeData | None = None
) -> tuple[SocketPiece, SocketPiece]:
    """Tip and tail socket sleeves for an edge: radial r+σ, axial h+σ.

    The tip piece starts at g_tip−σ, the tail piece at length−h−g_tail, both
    in the canonical frame, so the outlet rings face their owning nodes.
    The outlet vertex sets are combinatorial constants of the prism layout.
    """
    d = derived or derive_edge(net, params, edge)
    if d.swallowed:
        raise SwallowedEdge(f"edge {d.edge} is swallowed; no rod remains")
    r, sig, h = params.rod_radius, params.joint_thickness, params.socket_length
    p = params.effective_sides()
    tip_mesh = _scaled_prism(params, r + sig, h + sig, d.offset_tip - sig, d.placement)
    tail_mesh = _scaled_prism(
        params, r + sig, h + sig, d.length - h - d.offset_tail, d.placement
    )
    tip = SocketPiece(tip_mesh, prism_base_ring(p), d.tip, d.edge)
    tail = SocketPiece(tail_mesh, prism_top_ring(p), d.tail, d.edge)
    return tip, tail


def rod_solid(
    net: EdgeNetwork, params: FabricationParams, edge, derived: DerivedEdgeData | None = None
) -> TriMesh:
    """The physical rod: radius r, spanning the gap between the two offsets."""
    d = derived or derive_edge(net, params, edge)
    if d.swallowed or d.rod_length <= 0:
        raise SwallowedEdge(f"edge {d.edge} is swallowed; no rod remains")
    return _scaled_prism(params, params.rod_radius, d.rod_length, d.offset_tip, d.placement)


def cavity_solid(
    net: EdgeNetwork, params: FabricationParams, edge, derived: DerivedEdgeData | None = None
) -> TriMesh:
    """Rod clearance volume: radial r+ε, axial rod_length+2ε, offset g_tip−ε."""
    d = derived or derive_edge(net, params, edge)
    if d.swallowed:
        raise SwallowedEdge(f"edge {d.edge} is swallowed; no rod remains")
    r, eps = params.rod_radius, params.tolerance
    return _scaled_prism(params, r + eps, d.rod_length + 2.0 * eps, d.offset_tip - eps, d.placement)


def _joint_cavity(params, d: DerivedEdgeData, node: int) -> TriMesh:
    """Truncated cavity local to one joint (identical removal, local bbox)."""
    r, eps = params.rod_radius, params.tolerance
    h, sig = params.socket_length, params.joint_thickness
    g = d.offset_at(node)
    reach = 2.0 * (h + sig)  # beyond the socket cap by h+2σ−ε > 0
    full_len = d.rod_length + 2.0 * eps
    length = min(full_len, reach)
    if node == d.tip:
        z0 = d.offset_tip - eps
    else:
        z0 = d.length - d.offset_tail + eps - length
    return _scaled_prism(params, r + eps, length, z0, d.placement)


def build_joint(
    net: EdgeNetwork,
    params: FabricationParams,
    node: int,
    derived: dict | None = None,
) -> JointSolid:
    """Construct the printable joint solid at a node.

    Union of the node hull and every incident socket, minus every incident
    rod cavity.  On a boolean failure the socket axial offsets are jittered
    by +1e-5·k mm (k = 1..3) and the build retried; the jitter is
    deterministic so runs are reproducible.
    """
    incident = net.incident_edges(node)
    if not incident:
        raise ValueError(f"node {node} has no incident edges")
    derived = derived or {}
    per_edge = []
    for e in sorted(incident):
        d = derived.get((min(e), max(e))) or derive_edge(net, params, e)
        if d.swallowed:
            raise SwallowedEdge(f"edge {d.edge} is swallowed; cannot build joint {node}")
        if (node == d.tip and d.min_cos_tip is not None and d.min_cos_tip >= PARALLEL_COS) or (
            node == d.tail and d.min_cos_tail is not None and d.min_cos_tail >= PARALLEL_COS
        ):
            raise DegenerateAngle(f"node {node} has (near) parallel incident edges")
        per_edge.append(d)
    if node_is_degenerate(net, node):
        raise DegenerateAngle(f"node {node} has degenerate incident edge angles")

    last_failure = None
    for attempt in range(4):
        jitter = 1e-5 * attempt
        try:
            return JointSolid(node, _assemble_joint(net, params, node, per_edge, jitter), np.eye(3))
        except BooleanFailure as exc:
            last_failure = exc
    raise last_failure


def _assemble_joint(net, params, node, per_edge, jitter) -> TriMesh:
    r, sig, h = params.rod_radius, params.joint_thickness, params.socket_length
    p = params.effective_sides()
    sockets = []
    hull_points = [net.nodes[node]]
    for d in per_edge:
        g = d.offset_at(node) + jitter
        if node == d.tip:
            z0 = g - sig
            ring = prism_base_ring(p)
        else:
            z0 = d.length - h - g
            ring = prism_top_ring(p)
        mesh = _scaled_prism(params, r + sig, h + sig, z0, d.placement)
        sockets.append(mesh)
        hull_points.append(mesh.vertices[ring])
    try:
        shell = convex_hull(np.vstack([np.atleast_2d(q) for q in hull_points]))
    except DegenerateHull:
        shell = None

    # combine the small pieces first so the big mesh is traversed once
    solid = sockets[0]
    for mesh in sockets[1:]:
        solid = boolean("union", solid, mesh)
    if shell is not None:
        solid = boolean("union", solid, shell)
    cavities = [_jittered_cavity(params, d, node, jitter) for d in per_edge]
    if len(cavities) > 1:
        try:
            tool = cavities[0]
            for mesh in cavities[1:]:
                tool = boolean("union", tool, mesh)
            return boolean("difference", solid, tool)
        except BooleanFailure:
            pass  # fall back to one cavity at a time
    for mesh in cavities:
        solid = boolean("difference", solid, mesh)
    return solid


def _jittered_cavity(params, d, node, jitter) -> TriMesh:
    if jitter == 0.0:
        return _joint_cavity(params, d, node)
    shifted = replace(
        d,
        offset_tip=d.offset_tip + (jitter if node == d.tip else 0.0),
        offset_tail=d.offset_tail + (jitter if node == d.tail else 0.0),
    )
    return _joint_cavity(params, shifted, node)


def build_all_joints(
    net: EdgeNetwork, params: FabricationParams, jobs: int = 1
) -> list[JointSolid]:
    """Joints for every connected node, ordered by node index.

    Construction is independent per node; jobs > 1 fans out over processes
    with results reassembled in node order (scheduling cannot change them).
    """
    nodes = [i for i in range(net.n_nodes) if net.incident_edges(i)]
    derived = derive_all(net, params)
    if jobs <= 1 or len(nodes) <= 1:
        return [build_joint(net, params, i, derived) for i in nodes]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_build_worker, [(net, params, i) for i in nodes]))
    return sorted(results, key=lambda js: js.node)


def _build_worker(args) -> JointSolid:
    net, params, node = args
    return build_joint(net, params, node)
