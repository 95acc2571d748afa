"""Print orientation, cut packing and the SVG cut sheet."""

import itertools
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rodworks.errors import OversizeRod
from rodworks.fabrication import (
    CutPlan,
    cutplan_svg,
    cutplan_text,
    pack_cuts,
    print_orientation,
)
from rodworks.model import EdgeNetwork

from conftest import stub_network


def brute_force_min_bins(lengths, capacity) -> int:
    """Exhaustive optimum over ordered first-fit permutations (≤ 8 items)."""
    best = len(lengths)
    for perm in itertools.permutations(lengths):
        fills = []
        for x in perm:
            for i in range(len(fills)):
                if fills[i] + x <= capacity + 1e-9:
                    fills[i] += x
                    break
            else:
                fills.append(x)
        best = min(best, len(fills))
    return best


# --- print orientation --------------------------------------------------------


def test_orientation_single_edge_up():
    net = stub_network()
    po = print_orientation(net, 0)
    assert np.allclose(po.rotation, np.eye(3), atol=1e-12)


def test_orientation_opposite_edges_identity():
    net = EdgeNetwork(
        np.array([[0.0, 0, 0], [100.0, 0, 0], [-100.0, 0, 0]]), ((0, 1), (0, 2))
    )
    po = print_orientation(net, 0)
    assert np.allclose(po.rotation, np.eye(3))


def test_orientation_maps_average_to_z():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [100.0, 0, 0]]), ((0, 1),))
    po = print_orientation(net, 0)
    assert np.allclose(po.rotation @ np.array([1.0, 0, 0]), [0, 0, 1], atol=1e-12)
    r = po.rotation
    assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)


# --- packing --------------------------------------------------------------------


def test_pack_worked_example():
    plan = pack_cuts([600, 500, 400, 300, 200], 1000.0, 0.0, restarts=50, seed=0)
    assert plan.bins_used == 2
    got = {frozenset(length for _, length in b) for b in plan.bins}
    assert got == {frozenset({600.0, 400.0}), frozenset({500.0, 300.0, 200.0})}
    assert plan.problems() == []


def test_pack_single_rod():
    plan = pack_cuts([100.0], 1000.0, 10.0)
    assert plan.bins_used == 1
    assert plan.waste_total == pytest.approx(880.0)


def test_pack_oversize():
    with pytest.raises(OversizeRod) as err:
        pack_cuts([999.0], 1000.0, 10.0, ids=["edge-x"])
    assert err.value.edge == "edge-x"


def test_pack_matches_bruteforce_small_instances():
    rng = np.random.default_rng(17)
    for _ in range(25):
        n = rng.integers(2, 8)
        lengths = rng.uniform(50, 700, n).round(1).tolist()
        plan = pack_cuts(lengths, 1000.0, 0.0, restarts=120, seed=3)
        assert plan.bins_used == brute_force_min_bins(lengths, 1000.0)


@given(st.lists(st.floats(10.0, 800.0), min_size=1, max_size=20))
@settings(max_examples=30, deadline=None)
def test_pack_preserves_multiset_and_ffd_bound(lengths):
    plan = pack_cuts(lengths, 1000.0, 50.0, restarts=10, seed=1)
    packed = sorted(length for b in plan.bins for _, length in b)
    assert packed == sorted(float(x) for x in lengths)
    ffd_only = pack_cuts(lengths, 1000.0, 50.0, restarts=0, seed=1)
    assert plan.bins_used <= ffd_only.bins_used
    assert plan.problems() == []


def test_pack_deterministic():
    lengths = [333.3, 444.4, 111.1, 222.2, 555.5, 99.9]
    a = pack_cuts(lengths, 1000.0, 10.0, restarts=80, seed=42)
    b = pack_cuts(lengths, 1000.0, 10.0, restarts=80, seed=42)
    assert a == b


def test_pack_kerf_consumes_capacity():
    plan = pack_cuts([490.0, 490.0], 1000.0, 0.0, restarts=0, seed=0, kerf=30.0)
    assert plan.bins_used == 2  # 490+30+490 > 1000


# --- SVG -------------------------------------------------------------------------


def _cut_positions(svg):
    xs = [float(m) for m in re.findall(r'x1="([-\d.]+)"', svg)]
    ys = [float(m) for m in re.findall(r'y1="([-\d.]+)"', svg)]
    return xs, ys


def test_svg_empty_plan():
    plan = CutPlan((), 1000.0, 10.0)
    svg = cutplan_svg(plan, rod_diameter=6.35)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_svg_cut_positions():
    plan = CutPlan((((0, 300.0), (1, 400.0)),), 1000.0, 0.0)
    svg = cutplan_svg(plan, rod_diameter=6.0)
    xs, _ = _cut_positions(svg)
    assert xs == [0.0, 300.0, 700.0]


def test_svg_row_pitch():
    plan = CutPlan((((0, 300.0),), ((1, 500.0),)), 1000.0, 10.0)
    svg = cutplan_svg(plan, rod_diameter=6.0, jig_pitch=20.0)
    _, ys = _cut_positions(svg)
    assert min(ys) == pytest.approx(0.0 - 4.0)  # row 0 center minus half cut length
    assert max(ys) == pytest.approx(20.0 - 4.0)


def test_svg_positions_increasing_and_bounded():
    plan = pack_cuts([200.0, 350.0, 150.0, 420.0, 333.0], 1000.0, 10.0, restarts=20, seed=5)
    svg = cutplan_svg(plan, rod_diameter=6.35)
    xs, ys = _cut_positions(svg)
    rows = {}
    for x, y in zip(xs, ys):
        rows.setdefault(round(y, 3), []).append(x)
    for row in rows.values():
        assert row == sorted(row)
        assert all(x <= 1000.0 - 10.0 + 1e-9 for x in row)
        assert len(set(row)) == len(row)


def test_cutplan_text_manifest():
    plan = pack_cuts([600, 500, 400], 1000.0, 0.0, restarts=10, seed=0,
                     ids=[(0, 1), (0, 2), (1, 2)])
    text = cutplan_text(plan)
    assert "bin 1:" in text
    assert "0-1:600.0000" in text
    assert "waste" in text
