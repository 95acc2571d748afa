"""Session service: the serialized interface the studio UI drives.

One JSON object per line over a local TCP socket.  Requests carry an id,
an op and args; responses echo the id and the revision they describe.
Edits bump the revision and invalidate caches; interactive geometry uses
overlap-tolerant proxies (no booleans), full geometry runs them.
"""

from __future__ import annotations

import base64
import json
import socketserver
import threading

import numpy as np

from . import model
from .assembly import assembly_order, plan_to_dict
from .errors import RodworksError, StaleRevision
from .fabrication import pack_cuts
from .feasibility import diagnose
from .joints import (
    build_all_joints,
    derive_all,
    detect_degenerate_nodes,
    rod_solid,
    socket_pieces,
)
from .mesh.hull import convex_hull
from .mesh.trimesh import TriMesh
from .model import EdgeNetwork, FabricationParams, apply_edit


class SessionState:
    """Document plus revision-stamped caches (single writer)."""

    def __init__(self, net: EdgeNetwork, params: FabricationParams):
        self.net = net
        self.params = params
        self.revision = 0
        self._cache = {}

    def bump(self, net, params):
        self.net = net
        self.params = params
        self.revision += 1
        self._cache.clear()

    def cached(self, key, compute):
        full_key = (self.revision, key)
        if full_key not in self._cache:
            self._cache[full_key] = compute()
        return self._cache[full_key]


def mesh_payload(mesh: TriMesh) -> dict:
    return {
        "vertex_count": int(mesh.n_vertices),
        "face_count": int(mesh.n_faces),
        "vertices_b64": base64.b64encode(
            np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes()
        ).decode("ascii"),
        "faces_b64": base64.b64encode(
            np.ascontiguousarray(mesh.faces, dtype="<i4").tobytes()
        ).decode("ascii"),
    }


_COMMANDS = {
    "TranslateSelection": lambda a: model.TranslateSelection(
        tuple(a["selection"]), tuple(a["delta"])
    ),
    "RotateSelection": lambda a: model.RotateSelection(
        tuple(a["selection"]), tuple(a["axis"]), float(a["angle"]), tuple(a["pivot"])
    ),
    "ScaleSelection": lambda a: model.ScaleSelection(
        tuple(a["selection"]), float(a["factor"]), tuple(a["pivot"])
    ),
    "ConnectSelected": lambda a: model.ConnectSelected(tuple(a["selection"])),
    "SplitEdge": lambda a: model.SplitEdge(tuple(a["edge"])),
    "SetRadius": lambda a: model.SetRadius(float(a["value"])),
    "SetThickness": lambda a: model.SetThickness(float(a["value"])),
    "SetSocketLength": lambda a: model.SetSocketLength(float(a["value"])),
    "SetProfileSides": lambda a: model.SetProfileSides(a["value"]),
}


def command_from_dict(data: dict):
    kind = data.get("type")
    if kind not in _COMMANDS:
        raise ValueError(f"unknown edit command type {kind!r}")
    return _COMMANDS[kind](data)


def proxy_geometry(state: SessionState) -> dict:
    """Rod/socket/hull proxy meshes without any boolean work."""
    net, params = state.net, state.params
    derived = derive_all(net, params)
    degenerate = detect_degenerate_nodes(net, params)
    rods = []
    sockets = []
    for e in sorted(net.edges):
        d = derived[e]
        if d.swallowed or set(e) & degenerate:
            continue
        rods.append(
            {
                "edge": [int(e[0]), int(e[1])],
                "length_mm": round(d.rod_length, 9),
                **mesh_payload(rod_solid(net, params, e, d)),
            }
        )
        tip, tail = socket_pieces(net, params, e, d)
        for piece in (tip, tail):
            sockets.append(
                {
                    "node": int(piece.node),
                    "edge": [int(e[0]), int(e[1])],
                    **mesh_payload(piece.mesh),
                }
            )
    hulls = []
    p = params.effective_sides()
    for node in range(net.n_nodes):
        incident = net.incident_edges(node)
        if not incident or node in degenerate:
            continue
        pts = [net.nodes[node]]
        for e in sorted(incident):
            d = derived[(min(e), max(e))]
            if d.swallowed:
                continue
            tip, tail = socket_pieces(net, params, e, d)
            piece = tip if tip.node == node else tail
            pts.append(piece.mesh.vertices[piece.outlet_vertices])
        try:
            hull = convex_hull(np.vstack([np.atleast_2d(q) for q in pts]))
        except RodworksError:
            continue
        hulls.append({"node": int(node), **mesh_payload(hull)})
    return {"level": "proxy", "rods": rods, "sockets": sockets, "hulls": hulls}


def full_geometry(state: SessionState) -> dict:
    net, params = state.net, state.params
    derived = derive_all(net, params)
    joints = [
        {"node": int(js.node), "id": js.id_string(), **mesh_payload(js.mesh)}
        for js in build_all_joints(net, params)
    ]
    rods = []
    for e in sorted(net.edges):
        d = derived[e]
        if d.swallowed:
            continue
        rods.append(
            {
                "edge": [int(e[0]), int(e[1])],
                "length_mm": round(d.rod_length, 9),
                **mesh_payload(rod_solid(net, params, e, d)),
            }
        )
    return {"level": "full", "joints": joints, "rods": rods}


def handle_request(state: SessionState, req: dict) -> dict:
    """Apply one request; returns the response (session state may mutate)."""
    rid = req.get("id")
    op = req.get("op")
    args = req.get("args") or {}

    def ok(data):
        return {"id": rid, "revision": state.revision, "ok": True, "data": data}

    def fail(message):
        return {"id": rid, "revision": state.revision, "ok": False, "error": message}

    try:
        pinned = req.get("revision")
        if pinned is not None and pinned != state.revision:
            raise StaleRevision(
                f"request pinned revision {pinned}, session is at {state.revision}"
            )
        if op == "LoadDocument":
            net, params = model.document_from_dict(args["document"])
            state.bump(net, params)
            return ok({"nodes": net.n_nodes, "edges": net.n_edges})
        if op == "GetDocument":
            return ok({"document": model.document_to_dict(state.net, state.params)})
        if op == "ApplyEdit":
            cmd = command_from_dict(args["command"])
            net, params = apply_edit(state.net, state.params, cmd)
            state.bump(net, params)
            return ok({"nodes": net.n_nodes, "edges": net.n_edges})
        if op == "GetGeometry":
            level = args.get("level", "proxy")
            if level == "proxy":
                return ok(state.cached("proxy", lambda: proxy_geometry(state)))
            if level == "full":
                return ok(state.cached("full", lambda: full_geometry(state)))
            return fail(f"unknown geometry level {level!r}")
        if op == "GetDiagnostics":
            return ok(
                state.cached(
                    "diagnostics", lambda: diagnose(state.net, state.params).to_dict()
                )
            )
        if op == "GetCutPlan":
            return ok(state.cached("cutplan", lambda: _cutplan_dict(state, args)))
        if op == "GetAssemblyPlan":
            return ok(state.cached("plan", lambda: plan_to_dict(assembly_order(state.net))))
        if op == "ExportAll":
            from .cli import export_all

            out = export_all(state.net, state.params, args["dir"], seed=int(args.get("seed", 0)))
            return ok({"files": out})
        return fail(f"unknown op {op!r}")
    except (RodworksError, ValueError, KeyError, TypeError) as exc:
        return fail(f"{type(exc).__name__}: {exc}")


def _cutplan_dict(state: SessionState, args: dict) -> dict:
    derived = derive_all(state.net, state.params)
    edges = [e for e in sorted(state.net.edges) if not derived[e].swallowed]
    plan = pack_cuts(
        [derived[e].rod_length for e in edges],
        state.params.stock_length,
        state.params.stock_end_padding,
        restarts=int(args.get("restarts", 200)),
        seed=int(args.get("seed", 0)),
        ids=[f"{e[0]}-{e[1]}" for e in edges],
        kerf=float(args.get("kerf", 0.0)),
    )
    return {
        "stock_length": plan.stock_length,
        "padding": plan.padding,
        "bins_used": plan.bins_used,
        "waste_total": plan.waste_total,
        "bins": [[[ident, length] for ident, length in b] for b in plan.bins],
    }


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        state = self.server.session_state
        lock = self.server.session_lock
        for raw in self.rfile:
            line = raw.strip()
            if not line:
                continue
            try:
                req = json.loads(line.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                resp = {"id": None, "ok": False, "error": f"bad request line: {exc}"}
            else:
                with lock:  # single writer, consistent snapshots
                    resp = handle_request(state, req)
            self.wfile.write(json.dumps(resp).encode("utf-8") + b"\n")
            self.wfile.flush()


class SessionServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def serve(net: EdgeNetwork, params: FabricationParams, host: str = "127.0.0.1", port: int = 0):
    """Start the session server; returns (server, actual_port)."""
    server = SessionServer((host, port), _Handler)
    server.session_state = SessionState(net, params)
    server.session_lock = threading.Lock()
    return server, server.server_address[1]


def websocket_app(state: SessionState, lock: threading.Lock):
    """Minimal ASGI app bridging the session protocol to browser WebSockets.

    One JSON object per text frame, same request/response schema as the
    TCP transport.  Run it with uvicorn; no framework needed.
    """

    async def app(scope, receive, send):
        if scope["type"] == "lifespan":
            while True:
                message = await receive()
                if message["type"] == "lifespan.startup":
                    await send({"type": "lifespan.startup.complete"})
                elif message["type"] == "lifespan.shutdown":
                    await send({"type": "lifespan.shutdown.complete"})
                    return
        if scope["type"] != "websocket":
            await send(
                {"type": "http.response.start", "status": 404, "headers": []}
            )
            await send({"type": "http.response.body", "body": b"websocket only"})
            return
        message = await receive()
        if message["type"] != "websocket.connect":
            return
        await send({"type": "websocket.accept"})
        while True:
            message = await receive()
            if message["type"] == "websocket.disconnect":
                return
            text = message.get("text")
            if text is None:
                continue
            try:
                req = json.loads(text)
            except json.JSONDecodeError as exc:
                resp = {"id": None, "ok": False, "error": f"bad request: {exc}"}
            else:
                with lock:
                    resp = handle_request(state, req)
            await send({"type": "websocket.send", "text": json.dumps(resp)})

    return app


def serve_websocket(net: EdgeNetwork, params: FabricationParams,
                    host: str = "127.0.0.1", port: int = 8787):
    """Serve the session protocol over WebSocket (blocks; needs uvicorn)."""
    import uvicorn

    state = SessionState(net, params)
    app = websocket_app(state, threading.Lock())
    uvicorn.run(app, host=host, port=port, log_level="warning")
