"""Edge-network document: geometry, fabrication parameters, edits, validation.

The network is the single source of design truth: node positions in mm and
undirected edges.  Edits are pure: they return new documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import DegenerateEdge, StaleReference
from .mesh.trimesh import rotation_to

CIRCULAR = "circular"
CIRCULAR_SIDES = 32  # discretization used for all generated geometry


@dataclass(frozen=True)
class FabricationParams:
    """User knobs, millimeters throughout; densities kg/m³."""

    rod_radius: float = 3.175  # 6.35 mm dowel
    profile_sides: Union[int, str] = CIRCULAR
    joint_thickness: float = 2.0  # wall/cap thickness around sockets
    socket_length: float = 12.0  # how far joints overhang along rods
    tolerance: float = 0.15  # rod/socket clearance, may be negative
    stock_length: float = 1000.0
    stock_end_padding: float = 10.0  # rough factory cuts at either end
    wood_density: float = 700.0
    plastic_density: float = 1040.0

    def effective_sides(self) -> int:
        if self.profile_sides == CIRCULAR:
            return CIRCULAR_SIDES
        return int(self.profile_sides)

    def is_circular(self) -> bool:
        return self.profile_sides == CIRCULAR

    def problems(self) -> list[str]:
        out = []
        if not self.rod_radius > 0:
            out.append("rod_radius must be > 0")
        if not self.is_circular():
            if not (isinstance(self.profile_sides, int) and self.profile_sides >= 3):
                out.append("profile_sides must be an integer >= 3 or 'circular'")
        if not self.joint_thickness > 0:
            out.append("joint_thickness must be > 0")
        if not self.socket_length > 0:
            out.append("socket_length must be > 0")
        if not self.rod_radius + self.tolerance > 0:
            out.append("rod_radius + tolerance must be > 0")
        if not self.socket_length + self.joint_thickness > 0:
            out.append("socket_length + joint_thickness must be > 0")
        if not self.stock_length > 0:
            out.append("stock_length must be > 0")
        if self.stock_end_padding < 0:
            out.append("stock_end_padding must be >= 0")
        if not self.stock_length - 2 * self.stock_end_padding > 0:
            out.append("stock_length - 2*stock_end_padding must be > 0")
        if not self.wood_density > 0:
            out.append("wood_density must be > 0")
        if not self.plastic_density > 0:
            out.append("plastic_density must be > 0")
        return out


@dataclass(frozen=True)
class EdgeNetwork:
    """Embedded graph: node positions (mm) and undirected edges {i, j}."""

    nodes: np.ndarray  # (n, 3) float64
    edges: tuple  # of (min, max) index pairs, insertion-ordered

    def __post_init__(self):
        pts = np.asarray(self.nodes, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "nodes", pts)
        object.__setattr__(
            self, "edges", tuple((min(i, j), max(i, j)) for i, j in self.edges)
        )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incident_edges(self, node: int) -> list[tuple[int, int]]:
        return [e for e in self.edges if node in e]

    def neighbors(self, node: int) -> list[int]:
        out = []
        for i, j in self.edges:
            if i == node:
                out.append(j)
            elif j == node:
                out.append(i)
        return sorted(out)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple = ()
    warnings: tuple = ()

    def ok(self) -> bool:
        return not self.errors


# --- edit commands (selection payloads travel with the command) ------------


@dataclass(frozen=True)
class TranslateSelection:
    selection: tuple
    delta: tuple


@dataclass(frozen=True)
class RotateSelection:
    selection: tuple
    axis: tuple
    angle: float  # radians
    pivot: tuple


@dataclass(frozen=True)
class ScaleSelection:
    selection: tuple
    factor: float
    pivot: tuple


@dataclass(frozen=True)
class ConnectSelected:
    selection: tuple


@dataclass(frozen=True)
class SplitEdge:
    edge: tuple


@dataclass(frozen=True)
class SetRadius:
    value: float


@dataclass(frozen=True)
class SetThickness:
    value: float


@dataclass(frozen=True)
class SetSocketLength:
    value: float


@dataclass(frozen=True)
class SetProfileSides:
    value: Union[int, str]


EditCommand = Union[
    TranslateSelection,
    RotateSelection,
    ScaleSelection,
    ConnectSelected,
    SplitEdge,
    SetRadius,
    SetThickness,
    SetSocketLength,
    SetProfileSides,
]


def validate_network(net: EdgeNetwork) -> ValidationReport:
    """Report every violated invariant, deterministically ordered by index."""
    errors = []
    n = net.n_nodes
    for i, p in enumerate(net.nodes):
        if not np.isfinite(p).all():
            errors.append(("NonFiniteNode", i, f"node {i} has non-finite position"))
    for k, (i, j) in enumerate(net.edges):
        if i == j:
            errors.append(("SelfLoop", k, f"edge {k} connects node {i} to itself"))
        if not (0 <= i < n) or not (0 <= j < n):
            errors.append(("IndexOutOfRange", k, f"edge {k}=({i},{j}) references a missing node"))
    seen = {}
    for k, e in enumerate(net.edges):
        if e in seen:
            errors.append(("DuplicateEdge", k, f"edge {k}={e} duplicates edge {seen[e]}"))
        else:
            seen[e] = k
    return ValidationReport(errors=tuple(errors))


def apply_edit(
    net: EdgeNetwork, params: FabricationParams, cmd: EditCommand
) -> tuple[EdgeNetwork, FabricationParams]:
    """Apply one editing command; elements not named by the command are untouched."""
    if isinstance(cmd, (TranslateSelection, RotateSelection, ScaleSelection)):
        sel = sorted(set(int(s) for s in cmd.selection))
        for s in sel:
            if not 0 <= s < net.n_nodes:
                raise StaleReference(f"selected node {s} does not exist")
        nodes = net.nodes.copy()
        if isinstance(cmd, TranslateSelection):
            nodes[sel] += np.asarray(cmd.delta, dtype=np.float64)
        elif isinstance(cmd, ScaleSelection):
            pivot = np.asarray(cmd.pivot, dtype=np.float64)
            nodes[sel] = pivot + cmd.factor * (nodes[sel] - pivot)
        else:
            axis = np.asarray(cmd.axis, dtype=np.float64)
            norm = np.linalg.norm(axis)
            if norm == 0:
                raise ValueError("rotation axis must be nonzero")
            rot = _axis_angle(axis / norm, cmd.angle)
            pivot = np.asarray(cmd.pivot, dtype=np.float64)
            nodes[sel] = (nodes[sel] - pivot) @ rot.T + pivot
        return EdgeNetwork(nodes, net.edges), params

    if isinstance(cmd, ConnectSelected):
        sel = sorted(set(int(s) for s in cmd.selection))
        for s in sel:
            if not 0 <= s < net.n_nodes:
                raise StaleReference(f"selected node {s} does not exist")
        existing = set(net.edges)
        new_edges = list(net.edges)
        for a in range(len(sel)):
            for b in range(a + 1, len(sel)):
                e = (sel[a], sel[b])
                if e not in existing:  # duplicates rejected silently
                    new_edges.append(e)
                    existing.add(e)
        return EdgeNetwork(net.nodes, tuple(new_edges)), params

    if isinstance(cmd, SplitEdge):
        e = (min(cmd.edge), max(cmd.edge))
        if e not in set(net.edges):
            raise StaleReference(f"edge {e} does not exist")
        i, j = e
        mid = 0.5 * (net.nodes[i] + net.nodes[j])
        nodes = np.vstack([net.nodes, mid[None, :]])
        k = len(nodes) - 1
        edges = [x for x in net.edges if x != e] + [(i, k), (min(k, j), max(k, j))]
        return EdgeNetwork(nodes, tuple(edges)), params

    if isinstance(cmd, SetRadius):
        return net, replace(params, rod_radius=float(cmd.value))
    if isinstance(cmd, SetThickness):
        return net, replace(params, joint_thickness=float(cmd.value))
    if isinstance(cmd, SetSocketLength):
        return net, replace(params, socket_length=float(cmd.value))
    if isinstance(cmd, SetProfileSides):
        value = cmd.value
        if value != CIRCULAR:
            value = int(value)
        return net, replace(params, profile_sides=value)

    raise TypeError(f"unknown edit command {cmd!r}")


def _axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    from .mesh.trimesh import cross_matrix

    k = cross_matrix(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def canonical_edge_frame(net: EdgeNetwork, edge) -> tuple[int, int, np.ndarray, float]:
    """(tip, tail, unit direction tip→tail, length) for an undirected edge.

    tip = min(i, j): both sockets of an edge share this one frame, which is
    what keeps polygonal rod profiles from twisting between their two ends.
    """
    i, j = edge
    tip, tail = (i, j) if i < j else (j, i)
    if (tip, tail) not in set(net.edges):
        raise StaleReference(f"edge ({tip},{tail}) does not exist")
    d = net.nodes[tail] - net.nodes[tip]
    length = float(np.linalg.norm(d))
    if length < 1e-9:
        raise DegenerateEdge(f"edge ({tip},{tail}) endpoints coincide")
    return tip, tail, d / length, length


def edge_placement(net: EdgeNetwork, edge):
    """Rigid placement of the canonical edge frame: rotation + tip translation."""
    from .mesh.trimesh import Affine

    tip, tail, w, length = canonical_edge_frame(net, edge)
    rot = rotation_to(w)
    return Affine.from_rotation(rot, net.nodes[tip]), tip, tail, w, length


# --- JSON interchange -------------------------------------------------------

_PARAM_KEYS = {
    "r": "rod_radius",
    "p": "profile_sides",
    "sigma": "joint_thickness",
    "h": "socket_length",
    "eps": "tolerance",
    "b": "stock_length",
    "pad": "stock_end_padding",
    "wood_density": "wood_density",
    "plastic_density": "plastic_density",
}


def document_to_dict(net: EdgeNetwork, params: FabricationParams) -> dict:
    return {
        "nodes": [[float(c) for c in p] for p in net.nodes],
        "edges": [[int(i), int(j)] for i, j in net.edges],
        "params": {
            "r": params.rod_radius,
            "p": params.profile_sides,
            "sigma": params.joint_thickness,
            "h": params.socket_length,
            "eps": params.tolerance,
            "b": params.stock_length,
            "pad": params.stock_end_padding,
            "wood_density": params.wood_density,
            "plastic_density": params.plastic_density,
        },
    }


def document_from_dict(data: dict) -> tuple[EdgeNetwork, FabricationParams]:
    if not isinstance(data, dict):
        raise ValueError("document must be a JSON object")
    unknown = set(data) - {"nodes", "edges", "params"}
    if unknown:
        raise ValueError(f"unknown document keys: {sorted(unknown)}")
    if "nodes" not in data or "edges" not in data:
        raise ValueError("document needs 'nodes' and 'edges'")
    nodes = np.asarray(data["nodes"], dtype=np.float64)
    if nodes.size and (nodes.ndim != 2 or nodes.shape[1] != 3):
        raise ValueError("'nodes' must be a list of [x, y, z] triples")
    edges = []
    for e in data["edges"]:
        if len(e) != 2:
            raise ValueError(f"edge {e} must be a pair")
        edges.append((int(e[0]), int(e[1])))
    raw = data.get("params", {})
    unknown = set(raw) - set(_PARAM_KEYS)
    if unknown:
        raise ValueError(f"unknown param keys: {sorted(unknown)}")
    kwargs = {}
    for key, attr in _PARAM_KEYS.items():
        if key in raw:
            value = raw[key]
            if attr == "profile_sides":
                if value != CIRCULAR:
                    value = int(value)
            else:
                value = float(value)
            kwargs[attr] = value
    params = FabricationParams(**kwargs)
    problems = params.problems()
    if problems:
        raise ValueError("invalid params: " + "; ".join(problems))
    net = EdgeNetwork(nodes.reshape(-1, 3), tuple(edges))
    return net, params


def save_document(net: EdgeNetwork, params: FabricationParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document_to_dict(net, params), fh, indent=2)
        fh.write("\n")


def load_document(path) -> tuple[EdgeNetwork, FabricationParams]:
    with open(path, "r", encoding="utf-8") as fh:
        return document_from_dict(json.load(fh))
