"""Edge-network document: validation, edits, frames, JSON interchange."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rodworks import model
from rodworks.errors import DegenerateEdge, StaleReference
from rodworks.model import (
    ConnectSelected,
    EdgeNetwork,
    FabricationParams,
    ScaleSelection,
    SetProfileSides,
    SetRadius,
    SplitEdge,
    TranslateSelection,
    apply_edit,
    canonical_edge_frame,
    validate_network,
)

from conftest import default_params, tetra_network


def test_minimal_network_valid():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [1.0, 0, 0]]), ((0, 1),))
    assert validate_network(net).errors == ()


def test_self_loop_reported():
    net = EdgeNetwork(np.array([[0.0, 0, 0]]), ((0, 0),))
    codes = [c for c, _, _ in validate_network(net).errors]
    assert "SelfLoop" in codes


def test_duplicate_edge_reported():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [1.0, 0, 0]]), ((0, 1), (1, 0)))
    codes = [c for c, _, _ in validate_network(net).errors]
    assert "DuplicateEdge" in codes


def test_out_of_range_edge_reported():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [1.0, 0, 0]]), ((0, 5),))
    codes = [c for c, _, _ in validate_network(net).errors]
    assert "IndexOutOfRange" in codes


def test_split_edge_midpoint():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [2.0, 0, 0]]), ((0, 1),))
    out, _ = apply_edit(net, default_params(), SplitEdge((0, 1)))
    assert out.n_nodes == 3
    assert np.allclose(out.nodes[2], [1.0, 0, 0])
    assert set(out.edges) == {(0, 2), (1, 2)}
    assert validate_network(out).errors == ()


def test_translate_identity():
    net = tetra_network()
    out, _ = apply_edit(net, default_params(), TranslateSelection((0, 1, 2, 3), (0, 0, 0)))
    assert np.array_equal(out.nodes, net.nodes)
    assert out.edges == net.edges


def test_scale_about_origin():
    net = EdgeNetwork(np.array([[1.0, 0, 0], [0.0, 1, 0]]), ((0, 1),))
    out, _ = apply_edit(net, default_params(), ScaleSelection((0, 1), 2.0, (0, 0, 0)))
    assert np.allclose(out.nodes, [[2, 0, 0], [0, 2, 0]])


def test_connect_selected_skips_existing():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0]]), ((0, 1),))
    out, _ = apply_edit(net, default_params(), ConnectSelected((0, 1, 2)))
    assert set(out.edges) == {(0, 1), (0, 2), (1, 2)}
    assert len(out.edges) == 3  # the existing edge was not duplicated


def test_parameter_edits_replace_scalar():
    net = tetra_network()
    params = default_params()
    _, p2 = apply_edit(net, params, SetRadius(5.5))
    assert p2.rod_radius == 5.5
    assert p2.joint_thickness == params.joint_thickness
    _, p3 = apply_edit(net, params, SetProfileSides("circular"))
    assert p3.is_circular() and p3.effective_sides() == 32


def test_stale_reference():
    net = tetra_network()
    with pytest.raises(StaleReference):
        apply_edit(net, default_params(), SplitEdge((0, 9)))
    with pytest.raises(StaleReference):
        apply_edit(net, default_params(), TranslateSelection((99,), (1, 0, 0)))


def test_canonical_edge_frame_examples():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [0.0, 0, 5.0]]), ((0, 1),))
    tip, tail, w, length = canonical_edge_frame(net, (1, 0))
    assert (tip, tail) == (0, 1)
    assert np.allclose(w, [0, 0, 1])
    assert length == 5.0
    # order independence, bit for bit
    again = canonical_edge_frame(net, (0, 1))
    assert again[0] == tip and again[1] == tail
    assert np.array_equal(again[2], w) and again[3] == length


def test_degenerate_edge():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [0.0, 0, 0]]), ((0, 1),))
    with pytest.raises(DegenerateEdge):
        canonical_edge_frame(net, (0, 1))


def test_split_preserves_polyline_geometry():
    net = EdgeNetwork(np.array([[0.0, 0, 0], [4.0, 2, 6]]), ((0, 1),))
    out, _ = apply_edit(net, default_params(), SplitEdge((0, 1)))
    a, b = net.nodes[0], net.nodes[1]
    mid = out.nodes[2]
    assert np.allclose(mid, (a + b) / 2)
    # union of the two halves covers the original segment
    assert np.allclose(np.linalg.norm(mid - a) + np.linalg.norm(b - mid),
                       np.linalg.norm(b - a))


@given(
    st.integers(min_value=0, max_value=3),
    st.tuples(
        st.floats(-10, 10, allow_nan=False),
        st.floats(-10, 10, allow_nan=False),
        st.floats(-10, 10, allow_nan=False),
    ),
)
@settings(max_examples=40, deadline=None)
def test_translate_frame_rule(node, delta):
    """Elements not named by the command never change."""
    net = tetra_network()
    out, _ = apply_edit(net, default_params(), TranslateSelection((node,), delta))
    for i in range(net.n_nodes):
        if i == node:
            assert np.allclose(out.nodes[i], net.nodes[i] + np.asarray(delta))
        else:
            assert np.array_equal(out.nodes[i], net.nodes[i])
    assert out.edges == net.edges


def test_edits_keep_network_valid():
    net = tetra_network()
    params = default_params()
    for cmd in (
        SplitEdge((0, 1)),
        TranslateSelection((0,), (5, 0, 0)),
        ConnectSelected((1, 2, 3)),
        ScaleSelection((0, 1), 1.5, (0, 0, 0)),
    ):
        net, params = apply_edit(net, params, cmd)
        assert validate_network(net).errors == ()


def test_document_roundtrip(tmp_path):
    net = tetra_network()
    params = default_params(profile_sides="circular")
    path = tmp_path / "doc.json"
    model.save_document(net, params, path)
    net2, params2 = model.load_document(path)
    assert np.array_equal(net2.nodes, net.nodes)
    assert net2.edges == net.edges
    assert params2 == params


def test_unknown_keys_rejected(tmp_path):
    doc = {"nodes": [[0, 0, 0], [1, 0, 0]], "edges": [[0, 1]], "params": {}, "extra": 1}
    with pytest.raises(ValueError, match="unknown document keys"):
        model.document_from_dict(doc)
    doc2 = {"nodes": [[0, 0, 0]], "edges": [], "params": {"bogus": 3}}
    with pytest.raises(ValueError, match="unknown param keys"):
        model.document_from_dict(doc2)


def test_param_invariants_rejected():
    doc = {"nodes": [], "edges": [], "params": {"r": 1.0, "eps": -2.0}}
    with pytest.raises(ValueError, match="invalid params"):
        model.document_from_dict(doc)


def test_params_problems():
    assert FabricationParams().problems() == []
    assert FabricationParams(stock_length=10.0, stock_end_padding=6.0).problems()
