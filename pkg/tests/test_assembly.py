"""Assembly ordering and per-step views."""

import numpy as np
import pytest

from rodworks.assembly import Step, assembly_order, assembly_text, step_view
from rodworks.joints import derive_all
from rodworks.model import EdgeNetwork

from conftest import cube_network, default_params, frame_28_52, tetra_network


def _kinds(plan):
    return [(s.kind, s.part) for s in plan.steps]


def test_path_graph_order():
    net = EdgeNetwork(
        np.array([[0.0, 0, 0], [100.0, 0, 0], [200.0, 0, 0]]), ((0, 1), (1, 2))
    )
    plan = assembly_order(net, start=0)
    assert _kinds(plan) == [
        ("joint", 0), ("rod", (0, 1)), ("joint", 1), ("rod", (1, 2)), ("joint", 2),
    ]


def test_triangle_order():
    net = EdgeNetwork(
        np.array([[0.0, 0, 0], [100.0, 0, 0], [50.0, 90.0, 0]]), ((0, 1), (0, 2), (1, 2))
    )
    plan = assembly_order(net, start=0)
    assert _kinds(plan) == [
        ("joint", 0), ("rod", (0, 1)), ("rod", (0, 2)),
        ("joint", 1), ("rod", (1, 2)), ("joint", 2),
    ]


def test_default_start_lowest_node():
    net = cube_network()
    plan = assembly_order(net)
    first = plan.steps[0]
    assert first.kind == "joint"
    # lowest z, ties broken by index
    assert first.part == 0


def test_every_part_once_and_count():
    net = frame_28_52()
    plan = assembly_order(net)
    assert len(plan.steps) == net.n_nodes + net.n_edges == 80
    joints = [s.part for s in plan.steps if s.kind == "joint"]
    rods = [s.part for s in plan.steps if s.kind == "rod"]
    assert sorted(joints) == list(range(net.n_nodes))
    assert sorted(rods) == sorted(net.edges)


def test_prefix_connectivity():
    net = frame_28_52()
    plan = assembly_order(net)
    placed_nodes = set()
    placed_edges = set()
    for step in plan.steps:
        if step.kind == "joint":
            placed_nodes.add(step.part)
        else:
            placed_edges.add(step.part)
            assert step.part[0] in placed_nodes or step.part[1] in placed_nodes
        # the placed subgraph stays connected
        if placed_nodes:
            seen = set()
            stack = [next(iter(sorted(placed_nodes)))]
            nodes_in_graph = set(placed_nodes)
            for e in placed_edges:
                nodes_in_graph.update(e)
            adj = {n: [] for n in nodes_in_graph}
            for a, b in placed_edges:
                adj[a].append(b)
                adj[b].append(a)
            while stack:
                n = stack.pop()
                if n in seen:
                    continue
                seen.add(n)
                stack.extend(adj[n])
            assert seen == nodes_in_graph


def test_plan_deterministic():
    net = frame_28_52()
    assert assembly_order(net) == assembly_order(net)


def test_step_view_partitions(params):
    net = tetra_network()
    plan = assembly_order(net)
    first = step_view(plan, 0, net, params)
    assert first.context == ()
    assert len(first.future["nodes"]) + len(first.future["edges"]) == len(plan.steps) - 1
    last = step_view(plan, len(plan.steps) - 1, net, params)
    assert last.future == {"nodes": [], "edges": []}
    assert len(last.context) == len(plan.steps) - 1


def test_step_view_joint_label_and_rod_length(params):
    net = tetra_network()
    plan = assembly_order(net)
    derived = derive_all(net, params)
    for i, step in enumerate(plan.steps):
        view = step_view(plan, i, net, params, derived)
        if step.kind == "joint":
            assert view.focus["label"] == f"{step.part:02d}"
        else:
            assert view.focus["length_mm"] == pytest.approx(
                derived[step.part].rod_length, abs=1e-4
            )
        assert view.framing_radius > 0


def test_step_view_out_of_range(params):
    net = tetra_network()
    plan = assembly_order(net)
    with pytest.raises(IndexError):
        step_view(plan, len(plan.steps), net, params)


def test_disconnected_components_largest_first(params):
    nodes = np.array(
        [[0.0, 0, 0], [100.0, 0, 0], [0.0, 0, 300.0], [100.0, 0, 300.0], [200.0, 0, 300.0]]
    )
    net = EdgeNetwork(nodes, ((0, 1), (2, 3), (3, 4)))
    plan = assembly_order(net)
    parts = [s.part for s in plan.steps if s.kind == "joint"]
    assert parts[:3] == [2, 3, 4]  # larger component first
    assert sorted(parts) == [0, 1, 2, 3, 4]


def test_assembly_text(params):
    net = tetra_network()
    plan = assembly_order(net)
    text = assembly_text(plan, net, params)
    assert text.count("place joint") == 4
    assert text.count("insert rod") == 6
    assert "mm" in text


def test_step_ids():
    assert Step("joint", 3).part_id() == "joint:03"
    assert Step("rod", (0, 12)).part_id() == "rod:0-12"
