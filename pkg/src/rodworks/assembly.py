"""Guided assembly: depth-first part ordering and per-step focus views."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .joints import derive_all
from .model import EdgeNetwork, FabricationParams


@dataclass(frozen=True)
class Step:
    kind: str  # "joint" | "rod"
    part: object  # node index or canonical edge

    def part_id(self) -> str:
        if self.kind == "joint":
            return f"joint:{self.part:02d}"
        return f"rod:{self.part[0]}-{self.part[1]}"


@dataclass(frozen=True)
class AssemblyPlan:
    steps: tuple

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class StepView:
    index: int
    focus: dict  # part id plus display data
    context: tuple  # already placed part ids, recessed
    future: dict  # node dots and edge segments still to come
    camera_target: np.ndarray
    framing_radius: float


def assembly_order(net: EdgeNetwork, start: int | None = None) -> AssemblyPlan:
    """Depth-first plan: place a joint, then its unplaced rods, then recurse.

    The default start is the lowest node (z, then index) — assembly begins
    near the ground.  Disconnected networks get one sub-plan per component,
    largest first; every part appears exactly once.
    """
    components = _components(net)
    components.sort(key=lambda comp: (-len(comp), min(comp)))
    steps = []
    placed_edges = set()
    visited = set()
    for comp in components:
        if start is not None and start in comp:
            root = start
        else:
            root = min(comp, key=lambda i: (net.nodes[i][2], i))
        _dfs(net, root, visited, placed_edges, steps)
    # isolated nodes still get a joint step so every node appears once
    for i in range(net.n_nodes):
        if i not in visited:
            steps.append(Step("joint", i))
            visited.add(i)
    return AssemblyPlan(tuple(steps))


def _dfs(net, root, visited, placed_edges, steps):
    stack = [(root, None)]
    while stack:
        node, pending = stack.pop()
        if pending is None:
            if node in visited:
                continue
            visited.add(node)
            steps.append(Step("joint", node))
            for j in net.neighbors(node):
                e = (min(node, j), max(node, j))
                if e not in placed_edges:
                    placed_edges.add(e)
                    steps.append(Step("rod", e))
            children = [j for j in net.neighbors(node) if j not in visited]
            for j in reversed(children):
                stack.append((j, None))


def _components(net: EdgeNetwork) -> list[list[int]]:
    seen = set()
    comps = []
    adjacency = {i: net.neighbors(i) for i in range(net.n_nodes)}
    for i in range(net.n_nodes):
        if i in seen or not adjacency[i]:
            continue
        comp = []
        stack = [i]
        while stack:
            k = stack.pop()
            if k in seen:
                continue
            seen.add(k)
            comp.append(k)
            stack.extend(adjacency[k])
        comps.append(comp)
    return comps


def step_view(
    plan: AssemblyPlan,
    index: int,
    net: EdgeNetwork,
    params: FabricationParams,
    derived: dict | None = None,
) -> StepView:
    """Focus/context/future partition plus camera framing for one step."""
    if not 0 <= index < len(plan.steps):
        raise IndexError(f"step {index} out of range 0..{len(plan.steps) - 1}")
    derived = derived or derive_all(net, params)
    step = plan.steps[index]
    context = tuple(s.part_id() for s in plan.steps[:index])
    future_nodes = []
    future_edges = []
    for s in plan.steps[index + 1 :]:
        if s.kind == "joint":
            future_nodes.append(int(s.part))
        else:
            future_edges.append([int(s.part[0]), int(s.part[1])])

    if step.kind == "joint":
        node = int(step.part)
        target = net.nodes[node]
        anchors = [net.nodes[j] for j in net.neighbors(node)]
        focus = {"id": step.part_id(), "kind": "joint", "node": node, "label": f"{node:02d}"}
    else:
        e = step.part
        d = derived.get(e)
        target = 0.5 * (net.nodes[e[0]] + net.nodes[e[1]])
        anchors = [net.nodes[e[0]], net.nodes[e[1]]]
        focus = {
            "id": step.part_id(),
            "kind": "rod",
            "edge": [int(e[0]), int(e[1])],
            "length_mm": None if d is None else round(d.rod_length, 4),
        }
    reach = 2.0 * (params.socket_length + params.joint_thickness)
    radius = max((float(np.linalg.norm(a - target)) for a in anchors), default=0.0)
    return StepView(
        index=index,
        focus=focus,
        context=context,
        future={"nodes": future_nodes, "edges": future_edges},
        camera_target=np.asarray(target, dtype=np.float64),
        framing_radius=radius + reach,
    )


def assembly_text(
    plan: AssemblyPlan, net: EdgeNetwork, params: FabricationParams
) -> str:
    """Printable checklist: step number, part, ID or cut length."""
    derived = derive_all(net, params)
    lines = [f"assembly checklist: {len(plan.steps)} steps"]
    for i, step in enumerate(plan.steps):
        if step.kind == "joint":
            lines.append(f"{i + 1:3d}. place joint {step.part:02d}")
        else:
            d = derived.get(step.part)
            length = f"{d.rod_length:.4f} mm" if d is not None else "?"
            lines.append(
                f"{i + 1:3d}. insert rod {step.part[0]}-{step.part[1]} ({length})"
            )
    return "\n".join(lines) + "\n"


def plan_to_dict(plan: AssemblyPlan) -> dict:
    return {
        "steps": [
            {"kind": s.kind, "part": s.part if s.kind == "joint" else list(s.part)}
            for s in plan.steps
        ]
    }
