"""Acceptance suite: one test per release criterion, at stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.
"""

import itertools
import math
import time

import numpy as np
import pytest

from rodworks.engrave import EngraveParams, pick_spot, place_engraving
from rodworks.fabrication import pack_cuts
from rodworks.feasibility import balance_check
from rodworks.joints import (
    build_joint,
    derive_all,
    derive_edge,
    rod_solid,
    safe_offset,
    socket_pieces,
)
from rodworks.mesh import (
    intersect_meshes,
    mass_properties,
    signed_volume,
    solid_problems,
)
from rodworks.mesh.trimesh import Affine, transform
from rodworks.model import EdgeNetwork

from conftest import (
    acute_pair_network,
    cube_network,
    default_params,
    frame_28_52,
    stub_network,
    tetra_network,
    three_way_network,
)


def _report(num, ok, text):
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {text}")
    assert ok, text


FIXTURES = {
    "tetra": (tetra_network(), [0, 1, 2, 3]),
    "cube": (cube_network(), list(range(8))),
    "stub": (stub_network(), [0, 1]),
    "three_way": (three_way_network(), [0, 1]),
    "acute16": (acute_pair_network(16.0), [0, 1, 2]),
}


@pytest.fixture(scope="module")
def fixture_joints():
    params = default_params()
    out = {}
    for name, (net, nodes) in FIXTURES.items():
        out[name] = (net, [build_joint(net, params, n) for n in nodes])
    return out


@pytest.fixture(scope="module")
def engraved_joints(fixture_joints):
    params = default_params()
    out = {}
    for name, (net, joints) in fixture_joints.items():
        engraved = []
        for js in joints:
            ep = EngraveParams.for_joint(params, js.node, seed=101 + js.node)
            engraved.append(place_engraving(js.mesh, ep))
        out[name] = engraved
    return out


def test_criterion_1_offset_safety():
    """500 random two-edge nodes: rod solids pairwise disjoint, < 30 s."""
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    failures = []
    for i in range(500):
        theta_deg = rng.uniform(2.0, 178.0)
        r = rng.uniform(2.0, 10.0)
        eps = rng.uniform(-0.2, 0.3)
        sides = int(rng.choice([8, 12, 16, 32]))
        params = default_params(
            rod_radius=r, tolerance=eps, socket_length=4.0, profile_sides=sides
        )
        theta = math.radians(theta_deg)
        clearance = (r + abs(eps)) * math.sqrt((1 + math.cos(theta)) / (1 - math.cos(theta)))
        length = max(4.0 * clearance + 50.0, 150.0)
        net = acute_pair_network(theta_deg, length)
        rod_a = rod_solid(net, params, (0, 1))
        rod_b = rod_solid(net, params, (0, 2))
        if intersect_meshes(rod_a, rod_b):
            failures.append((theta_deg, r, eps, sides))
    elapsed = time.perf_counter() - t0
    _report(
        1,
        not failures and elapsed < 30.0,
        f"offset safety 500/500 disjoint in {elapsed:.1f}s (limit 30s); failures={failures[:3]}",
    )


def test_criterion_2_formula_anchors():
    """safe_offset anchors exact; rod length identity on every test network."""
    anchors_ok = True
    for r in (2.0, 3.175, 6.35, 9.0):
        for eps in (-0.2, -0.05, 0.0, 0.15, 0.3):
            anchors_ok &= safe_offset(0.0, r, eps) == r + eps  # exact
    c16 = math.cos(math.radians(16.0))
    got = safe_offset(c16, 1.0, 0.0)
    cot8 = 1.0 / math.tan(math.radians(8.0))
    anchors_ok &= abs(got - cot8) <= 1e-9

    length_ok = True
    for net, _ in FIXTURES.values():
        for e, d in derive_all(net, default_params()).items():
            length_ok &= d.rod_length == d.length - d.offset_tip - d.offset_tail
    net28 = frame_28_52()
    for e, d in derive_all(net28, default_params(socket_length=10.0, tolerance=0.1)).items():
        length_ok &= d.rod_length == d.length - d.offset_tip - d.offset_tail
    _report(
        2,
        anchors_ok and length_ok,
        f"safe_offset(c=0)=r+eps exact, safe_offset(16 deg)={got:.9f} vs cot8={cot8:.9f}, "
        f"rod-length identity exact on all networks",
    )


def test_criterion_3_solidity_suite(fixture_joints, engraved_joints):
    """Every fixture joint and engraved variant is a valid solid."""
    bad = []
    for name, (net, joints) in fixture_joints.items():
        for js in joints:
            problems = solid_problems(js.mesh)
            if problems:
                bad.append((name, js.node, problems))
        for mesh in engraved_joints[name]:
            problems = solid_problems(mesh)
            if problems:
                bad.append((name, "engraved", problems))
    n = sum(len(j) for _, j in fixture_joints.values())
    _report(3, not bad, f"{n} joints + {n} engraved variants all solid; bad={bad[:3]}")


def test_criterion_4_scale_invariance():
    """x2 node positions: joint volumes within 1e-6 relative, rod lengths follow."""
    params = default_params()
    worst = 0.0
    lengths_ok = True
    for name in ("tetra", "three_way", "acute16"):
        net, nodes = FIXTURES[name]
        scaled = EdgeNetwork(net.nodes * 2.0, net.edges)
        base_d = derive_all(net, params)
        scaled_d = derive_all(scaled, params)
        for e in net.edges:
            expect = 2.0 * base_d[e].length - base_d[e].offset_tip - base_d[e].offset_tail
            lengths_ok &= abs(scaled_d[e].rod_length - expect) <= 1e-6 * max(expect, 1.0)
        for n in nodes:
            v1 = signed_volume(build_joint(net, params, n).mesh)
            v2 = signed_volume(build_joint(scaled, params, n).mesh)
            worst = max(worst, abs(v2 - v1) / v1)
    _report(
        4,
        worst <= 1e-6 and lengths_ok,
        f"scale x2: max relative joint-volume change {worst:.2e} (limit 1e-6); "
        f"rod lengths follow 2L-g_ij-g_ji",
    )


def test_criterion_5_no_twist():
    """Tip/tail outlet polygons coincide after projecting out the edge axis."""
    params = default_params()
    worst = 0.0
    for name, (net, _) in FIXTURES.items():
        for e in net.edges:
            d = derive_edge(net, params, e)
            tip, tail = socket_pieces(net, params, e, d)
            w = d.direction
            ring_tip = tip.mesh.vertices[tip.outlet_vertices]
            ring_tail = tail.mesh.vertices[tail.outlet_vertices]
            proj_tip = ring_tip - np.outer(ring_tip @ w, w)
            proj_tail = ring_tail - np.outer(ring_tail @ w, w)
            worst = max(worst, float(np.linalg.norm(proj_tip - proj_tail, axis=1).max()))
    _report(5, worst <= 1e-9, f"no-twist: max outlet mismatch {worst:.2e} (limit 1e-9)")


def _optimal_bins(lengths, capacity):
    """Exact minimum bin count via subset DP (n <= 8)."""
    n = len(lengths)
    fits = []
    for mask in range(1 << n):
        total = sum(lengths[i] for i in range(n) if mask >> i & 1)
        fits.append(total <= capacity + 1e-9)
    best = [n + 1] * (1 << n)
    best[0] = 0
    for mask in range(1, 1 << n):
        sub = mask
        while sub:
            if fits[sub]:
                cand = best[mask ^ sub] + 1
                if cand < best[mask]:
                    best[mask] = cand
            sub = (sub - 1) & mask
    return best[(1 << n) - 1]


def test_criterion_6_packing_optimality():
    """200 random instances (<= 8 rods) match the exhaustive optimum, < 10 s."""
    rng = np.random.default_rng(99)
    t0 = time.perf_counter()
    mismatches = []
    for _ in range(200):
        n = int(rng.integers(1, 9))
        lengths = rng.uniform(40.0, 900.0, n).round(1).tolist()
        plan = pack_cuts(lengths, 1000.0, 0.0, restarts=200, seed=7)
        opt = _optimal_bins(lengths, 1000.0)
        if plan.bins_used != opt:
            mismatches.append((lengths, plan.bins_used, opt))
    example = pack_cuts([600, 500, 400, 300, 200], 1000.0, 0.0, restarts=200, seed=7)
    elapsed = time.perf_counter() - t0
    _report(
        6,
        not mismatches and example.bins_used == 2 and elapsed < 10.0,
        f"packing optimal on 200/200 instances, 5-length example = 2 bins, "
        f"{elapsed:.1f}s (limit 10s); mismatches={mismatches[:2]}",
    )


def test_criterion_7_balance():
    """Cube frame: margin = half side within 1 mm; sheared top flips unstable."""
    side = 300.0
    params = default_params(
        rod_radius=0.6, joint_thickness=0.25, socket_length=4.0, tolerance=0.05
    )
    net = cube_network(side)
    report = balance_check(net, params)
    margin_ok = report.stable and abs(report.margin - side / 2.0) <= 1.0

    nodes = net.nodes.copy()
    nodes[4:, 0] += 2.0 * side
    sheared = EdgeNetwork(nodes, net.edges)
    sheared_report = balance_check(sheared, params)
    flipped = sheared_report.stable is False

    # analytic aggregation oracle: joints as node point masses, rods as
    # uniform sticks at midpoints
    from rodworks.joints import build_all_joints

    masses, moments = [], []
    for js in build_all_joints(sheared, params):
        _, m, _ = mass_properties(js.mesh, params.plastic_density)
        masses.append(m)
        moments.append(m * sheared.nodes[js.node])
    for e, d in derive_all(sheared, params).items():
        _, m, _ = mass_properties(rod_solid(sheared, params, e, d), params.wood_density)
        masses.append(m)
        moments.append(m * 0.5 * (sheared.nodes[e[0]] + sheared.nodes[e[1]]))
    oracle = np.sum(moments, axis=0) / sum(masses)
    extent = float(np.linalg.norm(sheared.nodes.max(axis=0) - sheared.nodes.min(axis=0)))
    com_ok = float(np.linalg.norm(sheared_report.com - oracle)) <= 0.01 * extent
    _report(
        7,
        margin_ok and flipped and com_ok,
        f"cube margin {report.margin:.2f} vs {side / 2:.0f} (within 1mm: {margin_ok}); "
        f"sheared unstable: {flipped}; CoM vs oracle within 1%: {com_ok}",
    )


def test_criterion_8_assembly_plan():
    """28/52 network: exactly 80 steps, prefix-connected at every index."""
    from rodworks.assembly import assembly_order

    net = frame_28_52()
    plan = assembly_order(net)
    count_ok = len(plan.steps) == 80 and net.n_nodes == 28 and net.n_edges == 52

    connected = True
    placed_nodes = set()
    placed_edges = set()
    for step in plan.steps:
        if step.kind == "joint":
            placed_nodes.add(step.part)
        else:
            placed_edges.add(step.part)
        nodes_in_graph = set(placed_nodes)
        for e in placed_edges:
            nodes_in_graph.update(e)
        adj = {m: [] for m in nodes_in_graph}
        for a, b in placed_edges:
            adj[a].append(b)
            adj[b].append(a)
        seen = set()
        stack = [min(nodes_in_graph)]
        while stack:
            m = stack.pop()
            if m in seen:
                continue
            seen.add(m)
            stack.extend(adj[m])
        if seen != nodes_in_graph:
            connected = False
            break
    _report(
        8,
        count_ok and connected,
        f"plan has {len(plan.steps)} steps (28 joints + 52 rods), "
        f"prefix-connected at every index: {connected}",
    )


def test_criterion_9_end_to_end_determinism(tmp_path):
    """`all` twice with one seed: byte-identical STL/SVG/CSV, each run < 60 s."""
    from rodworks.cli import export_all

    net = frame_28_52()
    params = default_params(socket_length=10.0, tolerance=0.1)
    times = []
    outs = []
    for run in range(2):
        out = tmp_path / f"run{run}"
        t0 = time.perf_counter()
        export_all(net, params, out, seed=5, engrave_seed=5)
        times.append(time.perf_counter() - t0)
        outs.append(out)
    identical = True
    names = sorted(p.name for p in outs[0].iterdir())
    for name in names:
        if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes():
            identical = False
            break
    time_ok = max(times) < 60.0
    _report(
        9,
        identical and time_ok,
        f"two runs byte-identical over {len(names)} files: {identical}; "
        f"runtimes {times[0]:.1f}s / {times[1]:.1f}s (limit 60s)",
    )


def test_criterion_10_engraver(fixture_joints, engraved_joints):
    """Argmin spot choice, watertight results, winner rigid-motion invariant."""
    params = default_params()
    argmin_ok = True
    watertight_ok = True
    for name, (net, joints) in fixture_joints.items():
        for js, engraved in zip(joints, engraved_joints[name]):
            ep = EngraveParams.for_joint(params, js.node, seed=101 + js.node)
            winner, _, combined, _ = pick_spot(js.mesh, ep)
            argmin_ok &= combined[winner] <= float(combined.min()) + 1e-15
            watertight_ok &= solid_problems(engraved) == []
            watertight_ok &= signed_volume(engraved) < signed_volume(js.mesh)

    js = fixture_joints["three_way"][1][0]
    ep = EngraveParams.for_joint(params, js.node, seed=101 + js.node)
    w1, s1, _, _ = pick_spot(js.mesh, ep)
    ang = 0.61
    rot = np.array(
        [[1, 0, 0], [0, math.cos(ang), -math.sin(ang)], [0, math.sin(ang), math.cos(ang)]]
    )
    moved = transform(js.mesh, Affine.from_rotation(rot, (13.0, -4.0, 9.0)))
    w2, s2, _, _ = pick_spot(moved, ep)
    invariant = w1 == w2 and np.allclose(
        rot @ s1.positions[w1] + np.array([13.0, -4.0, 9.0]), s2.positions[w2], atol=1e-9
    )
    _report(
        10,
        argmin_ok and watertight_ok and invariant,
        f"argmin property: {argmin_ok}; engraved watertight with smaller volume: "
        f"{watertight_ok}; winner rigid-motion invariant: {invariant}",
    )
