"""Session protocol: revisioning, caching, proxy/full geometry, transport."""

import base64
import json
import socket

import numpy as np
import pytest

from rodworks.model import document_to_dict
from rodworks.service import SessionState, handle_request, mesh_payload, serve

from conftest import default_params, tetra_network


@pytest.fixture
def state():
    return SessionState(tetra_network(), default_params())


def _decode(payload):
    verts = np.frombuffer(base64.b64decode(payload["vertices_b64"]), dtype="<f8").reshape(-1, 3)
    faces = np.frombuffer(base64.b64decode(payload["faces_b64"]), dtype="<i4").reshape(-1, 3)
    return verts, faces


def test_apply_edit_bumps_revision(state):
    resp = handle_request(
        state,
        {
            "id": 1,
            "op": "ApplyEdit",
            "args": {"command": {"type": "SetRadius", "value": 4.0}},
        },
    )
    assert resp["ok"] and resp["revision"] == 1
    assert state.params.rod_radius == 4.0


def test_stale_revision_rejected(state):
    handle_request(
        state,
        {"id": 1, "op": "ApplyEdit", "args": {"command": {"type": "SetRadius", "value": 4.0}}},
    )
    resp = handle_request(state, {"id": 2, "op": "GetDiagnostics", "revision": 0})
    assert not resp["ok"]
    assert "StaleRevision" in resp["error"]


def test_proxy_geometry_cached_identical(state):
    r1 = handle_request(state, {"id": 1, "op": "GetGeometry", "args": {"level": "proxy"}})
    r2 = handle_request(state, {"id": 2, "op": "GetGeometry", "args": {"level": "proxy"}})
    assert r1["ok"] and r2["ok"]
    assert json.dumps(r1["data"], sort_keys=True) == json.dumps(r2["data"], sort_keys=True)


def test_proxy_and_full_agree_on_exterior_measurements(state):
    proxy = handle_request(state, {"id": 1, "op": "GetGeometry", "args": {"level": "proxy"}})["data"]
    full = handle_request(state, {"id": 2, "op": "GetGeometry", "args": {"level": "full"}})["data"]
    p_lengths = {tuple(r["edge"]): r["length_mm"] for r in proxy["rods"]}
    f_lengths = {tuple(r["edge"]): r["length_mm"] for r in full["rods"]}
    assert p_lengths.keys() == f_lengths.keys()
    for e in p_lengths:
        assert p_lengths[e] == pytest.approx(f_lengths[e], abs=1e-9)
    # proxy sockets sit inside their merged joint solid wherever a neighbor
    # rod cavity does not legitimately carve them away
    from rodworks.joints import cavity_solid
    from rodworks.mesh import points_inside
    from rodworks.mesh.trimesh import TriMesh

    net = state.net
    cavities = [cavity_solid(net, state.params, e) for e in net.edges]
    for joint in full["joints"]:
        jv, jf = _decode(joint)
        joint_mesh = TriMesh(jv, jf)
        for sock in proxy["sockets"]:
            if sock["node"] != joint["node"]:
                continue
            sv, _ = _decode(sock)
            centroid = sv.mean(axis=0)
            probes = sv + 1e-3 * (centroid - sv)
            in_cavity = np.zeros(len(probes), dtype=bool)
            for cav in cavities:
                in_cavity |= points_inside(cav, probes)
            keep = ~in_cavity
            assert keep.sum() >= len(probes) // 2
            assert points_inside(joint_mesh, probes[keep]).all()


def test_diagnostics_follow_edit(state):
    r1 = handle_request(state, {"id": 1, "op": "GetDiagnostics"})
    assert r1["ok"] and r1["data"]["feasible"]
    # choke the sockets so every edge is swallowed
    handle_request(
        state,
        {"id": 2, "op": "ApplyEdit", "args": {"command": {"type": "SetSocketLength", "value": 150.0}}},
    )
    r2 = handle_request(state, {"id": 3, "op": "GetDiagnostics"})
    assert r2["ok"] and r2["revision"] == 1
    assert not r2["data"]["feasible"]
    assert len(r2["data"]["swallowed_edges"]) == 6


def test_cutplan_and_plan_ops(state):
    plan = handle_request(state, {"id": 1, "op": "GetCutPlan", "args": {"seed": 0}})
    assert plan["ok"] and plan["data"]["bins_used"] >= 2
    order = handle_request(state, {"id": 2, "op": "GetAssemblyPlan"})
    assert order["ok"] and len(order["data"]["steps"]) == 10


def test_load_document(state):
    doc = document_to_dict(tetra_network(300.0), default_params())
    resp = handle_request(state, {"id": 1, "op": "LoadDocument", "args": {"document": doc}})
    assert resp["ok"] and resp["data"]["nodes"] == 4
    assert state.revision == 1


def test_get_document_roundtrip(state):
    resp = handle_request(state, {"id": 1, "op": "GetDocument"})
    assert resp["ok"]
    doc = resp["data"]["document"]
    assert len(doc["nodes"]) == 4 and len(doc["edges"]) == 6
    # edits are reflected in the served document
    handle_request(
        state,
        {"id": 2, "op": "ApplyEdit", "args": {"command": {"type": "SetRadius", "value": 4.5}}},
    )
    resp2 = handle_request(state, {"id": 3, "op": "GetDocument"})
    assert resp2["data"]["document"]["params"]["r"] == 4.5


def test_unknown_op(state):
    resp = handle_request(state, {"id": 9, "op": "Nonsense"})
    assert not resp["ok"]


def test_bad_edit_reports_error(state):
    resp = handle_request(
        state,
        {"id": 1, "op": "ApplyEdit", "args": {"command": {"type": "SplitEdge", "edge": [0, 99]}}},
    )
    assert not resp["ok"]
    assert "StaleReference" in resp["error"]
    assert state.revision == 0  # failed edits do not bump


def test_tcp_roundtrip():
    server, port = serve(tetra_network(), default_params())
    import threading

    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        with socket.create_connection(("127.0.0.1", port), timeout=10) as conn:
            fh = conn.makefile("rwb")
            for i, req in enumerate(
                [
                    {"id": 1, "op": "GetDiagnostics"},
                    {"id": 2, "op": "ApplyEdit", "args": {"command": {"type": "SetRadius", "value": 2.5}}},
                    {"id": 3, "op": "GetAssemblyPlan"},
                ]
            ):
                fh.write(json.dumps(req).encode() + b"\n")
                fh.flush()
                resp = json.loads(fh.readline())
                assert resp["id"] == req["id"]
                assert resp["ok"], resp
                assert resp["revision"] == (0 if i == 0 else 1)
    finally:
        server.shutdown()
        server.server_close()


def test_mesh_payload_roundtrip():
    from conftest import box_mesh

    cube = box_mesh([0, 0, 0], [1, 2, 3])
    verts, faces = _decode(mesh_payload(cube))
    assert np.array_equal(verts, cube.vertices)
    assert np.array_equal(faces, cube.faces)
