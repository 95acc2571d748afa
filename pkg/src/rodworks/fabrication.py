"""Fabrication outputs: print orientations and the rod cut plan."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OversizeRod
from .mesh.trimesh import cross_matrix
from .model import EdgeNetwork, canonical_edge_frame

DEFAULT_RESTARTS = 200
DEFAULT_JIG_PITCH = 20.0  # mm between rows, matches a comb jig
OVERCUT = 2.0  # mm extra on either side of the rod diameter per cut line


@dataclass(frozen=True)
class PrintOrientation:
    node: int
    rotation: np.ndarray  # maps design pose to printer pose


@dataclass(frozen=True)
class CutPlan:
    bins: tuple  # of tuples of (edge id, length mm), in cut order
    stock_length: float
    padding: float
    kerf: float = 0.0

    @property
    def bins_used(self) -> int:
        return len(self.bins)

    @property
    def capacity(self) -> float:
        return self.stock_length - 2.0 * self.padding

    @property
    def waste_total(self) -> float:
        used = sum(length for b in self.bins for _, length in b)
        return self.bins_used * self.capacity - used

    def problems(self) -> list[str]:
        out = []
        for i, b in enumerate(self.bins):
            total = sum(length for _, length in b) + self.kerf * max(len(b) - 1, 0)
            if total > self.capacity + 1e-9:
                out.append(f"bin {i} overfull: {total} > {self.capacity}")
        return out


def print_orientation(net: EdgeNetwork, node: int) -> PrintOrientation:
    """Rotation aligning the node's average edge direction with +z.

    +z is the printing extrusion direction; pointing the socket openings up
    keeps support material out of the cavities.  A vanishing average
    (opposing edges) falls back to the identity.
    """
    total = np.zeros(3)
    for e in net.incident_edges(node):
        _, _, w, _ = canonical_edge_frame(net, e)
        if node == max(e):
            w = -w
        total += w
    norm = float(np.linalg.norm(total))
    if norm < 1e-6:
        return PrintOrientation(node, np.eye(3))
    a = total / norm
    if a[2] < -1.0 + 1e-8:
        return PrintOrientation(node, np.diag([1.0, -1.0, -1.0]))
    v = np.array([a[1], -a[0], 0.0])  # a × e_z
    k = cross_matrix(v)
    rot = np.eye(3) + k + (k @ k) / (1.0 + a[2])
    return PrintOrientation(node, rot)


def pack_cuts(
    lengths,
    stock_length: float,
    padding: float,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    ids=None,
    kerf: float = 0.0,
) -> CutPlan:
    """First-fit packing, best over FFD plus seeded random orderings.

    lengths are the rod lengths in mm; ids (parallel, default indices) label
    the cuts in the plan.  Ties prefer the emptier last bin, then the
    lexicographically smallest bin signature, so plans are reproducible.
    """
    lengths = [float(x) for x in lengths]
    if ids is None:
        ids = list(range(len(lengths)))
    items = list(zip(ids, lengths))
    capacity = stock_length - 2.0 * padding
    for ident, length in items:
        if length > capacity + 1e-9:
            raise OversizeRod(
                f"rod {ident} of {length} mm exceeds usable stock {capacity} mm",
                edge=ident,
            )
        if length <= 0:
            raise ValueError(f"rod {ident} has non-positive length {length}")
    if not items:
        return CutPlan((), stock_length, padding, kerf)

    def first_fit(ordering):
        bins = []
        fills = []
        for ident, length in ordering:
            need = length
            for i in range(len(bins)):
                extra = kerf if bins[i] else 0.0
                if fills[i] + extra + need <= capacity + 1e-9:
                    bins[i].append((ident, length))
                    fills[i] += extra + need
                    break
            else:
                bins.append([(ident, length)])
                fills.append(need)
        return bins, fills

    orderings = [sorted(items, key=lambda it: (-it[1], str(it[0])))]
    rng = np.random.default_rng(seed)
    for _ in range(max(restarts, 0)):
        perm = rng.permutation(len(items))
        orderings.append([items[i] for i in perm])

    best = None
    best_key = None
    for ordering in orderings:
        bins, fills = first_fit(ordering)
        signature = tuple(tuple(length for _, length in b) for b in bins)
        key = (len(bins), fills[-1] if fills else 0.0, signature)
        if best_key is None or key < best_key:
            best = bins
            best_key = key
    return CutPlan(tuple(tuple(b) for b in best), stock_length, padding, kerf)


def cutplan_svg(plan: CutPlan, rod_diameter: float, jig_pitch: float = DEFAULT_JIG_PITCH) -> str:
    """SVG cut sheet: one row per bin, vertical hairline strokes per cut.

    Cut lines sit at x = padding + cumulative lengths (plus kerf steps); the
    final cut of each bin is included.  Units are mm via the viewBox.
    """
    cut_len = rod_diameter + OVERCUT
    rows = []
    for row, b in enumerate(plan.bins):
        y0 = row * jig_pitch - cut_len / 2.0
        y1 = row * jig_pitch + cut_len / 2.0
        x = plan.padding
        rows.append(_svg_line(x, y0, x, y1))  # leading cut after the padding
        for k, (_, length) in enumerate(b):
            x += length + (plan.kerf if k > 0 else 0.0)
            rows.append(_svg_line(x, y0, x, y1))
    height = max(len(plan.bins) - 1, 0) * jig_pitch + cut_len
    width = plan.stock_length
    body = "\n".join(rows)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{-cut_len:.3f} {-cut_len:.3f} {width + 2 * cut_len:.3f} {height + cut_len:.3f}" '
        f'width="{width}mm" height="{height + cut_len}mm">\n'
        f"{body}\n</svg>\n"
    )


def _svg_line(x0, y0, x1, y1) -> str:
    return (
        f'<line x1="{x0:.4f}" y1="{y0:.4f}" x2="{x1:.4f}" y2="{y1:.4f}" '
        f'stroke="black" stroke-width="0.01"/>'
    )


def cutplan_text(plan: CutPlan) -> str:
    """Human-readable manifest: bin number, ordered cuts, per-bin waste."""
    lines = [
        f"stock {plan.stock_length:.1f} mm, padding {plan.padding:.1f} mm, "
        f"usable {plan.capacity:.1f} mm, bins {plan.bins_used}, "
        f"waste {plan.waste_total:.1f} mm"
    ]
    for i, b in enumerate(plan.bins):
        used = sum(length for _, length in b) + plan.kerf * max(len(b) - 1, 0)
        cuts = ", ".join(f"{_fmt_id(ident)}:{length:.4f}" for ident, length in b)
        lines.append(f"bin {i + 1}: {cuts}  (waste {plan.capacity - used:.4f} mm)")
    return "\n".join(lines) + "\n"


def _fmt_id(ident) -> str:
    if isinstance(ident, tuple):
        return "-".join(str(x) for x in ident)
    return str(ident)
