"""Command-line pipeline driver."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .assembly import assembly_order, assembly_text
from .engrave import EngraveParams, place_engraving
from .errors import RodworksError
from .fabrication import cutplan_svg, cutplan_text, pack_cuts, print_orientation
from .feasibility import balance_check, detect_rod_intersections, diagnose
from .joints import (
    build_all_joints,
    derive_all,
    detect_degenerate_nodes,
    detect_swallowed,
    rod_solid,
)
from .mesh.stl import export_stl
from .mesh.trimesh import Affine, transform
from .model import load_document, validate_network


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RodworksError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rodworks",
        description="Design-to-assembly toolkit for 3D-printed joints and precision-cut rods",
    )
    parser.set_defaults(command=None)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("file", help="edge-network JSON document")
        p.add_argument("--seed", type=int, default=0, help="cut-plan RNG seed")
        p.add_argument("--restarts", type=int, default=200, help="cut-plan random restarts")
        p.add_argument("--kerf", type=float, default=0.0, help="saw kerf per cut (mm)")
        p.add_argument("--jig-pitch", type=float, default=20.0, help="cut sheet row pitch (mm)")
        p.add_argument("--engrave-seed", type=int, default=0, help="engraving RNG seed")
        p.add_argument("--samples", type=int, default=10000, help="engraving surface samples")
        p.add_argument("--k", type=int, default=200, help="engraving nearest neighbors")
        p.add_argument("--ao-rays", type=int, default=64, help="ambient occlusion rays")
        p.add_argument("--jobs", type=int, default=1, help="parallel joint builds")

    p_check = sub.add_parser("check", help="run feasibility diagnostics")
    common(p_check)
    p_check.add_argument("--json", action="store_true", help="machine-readable output")
    p_check.set_defaults(func=cmd_check)

    p_build = sub.add_parser("build", help="emit joint STLs and the rod manifest")
    common(p_build)
    p_build.add_argument("-o", "--out", required=True, help="output directory")
    p_build.set_defaults(func=cmd_build)

    p_engrave = sub.add_parser("engrave", help="emit engraved joint STLs")
    common(p_engrave)
    p_engrave.add_argument("-o", "--out", required=True, help="output directory")
    p_engrave.set_defaults(func=cmd_engrave)

    p_cut = sub.add_parser("cutplan", help="emit the laser cut sheet")
    common(p_cut)
    p_cut.add_argument("-o", "--out", required=True, help="output SVG path")
    p_cut.set_defaults(func=cmd_cutplan)

    p_order = sub.add_parser("order", help="emit the assembly checklist")
    common(p_order)
    p_order.add_argument("-o", "--out", required=True, help="output text path")
    p_order.set_defaults(func=cmd_order)

    p_serve = sub.add_parser("serve", help="serve the session protocol")
    common(p_serve)
    p_serve.add_argument("--port", type=int, default=0, help="port (0 = ephemeral TCP)")
    p_serve.add_argument(
        "--transport", choices=("tcp", "ws"), default="tcp",
        help="tcp: newline-delimited JSON socket; ws: WebSocket for browsers",
    )
    p_serve.set_defaults(func=cmd_serve)

    p_all = sub.add_parser("all", help="full pipeline into a directory")
    common(p_all)
    p_all.add_argument("-o", "--out", required=True, help="output directory")
    p_all.set_defaults(func=cmd_all)
    return parser


def _load(args):
    net, params = load_document(args.file)
    report = validate_network(net)
    if not report.ok():
        details = "; ".join(msg for _, _, msg in report.errors)
        raise ValueError(f"invalid network: {details}")
    return net, params


def cmd_check(args) -> int:
    net, params = _load(args)
    diag = diagnose(net, params)
    if args.json:
        print(json.dumps(diag.to_dict(), sort_keys=True))
    else:
        d = diag.to_dict()
        stable = d["balance"]["stable"]
        balance = "stable" if stable else ("unknown" if stable is None else "UNSTABLE")
        print(
            f"nodes {net.n_nodes}, edges {net.n_edges}: "
            f"{len(d['intersecting_edge_pairs'])} rod intersections, "
            f"{len(d['swallowed_edges'])} swallowed edges, "
            f"{len(d['degenerate_nodes'])} degenerate nodes, "
            f"balance {balance}"
        )
        for note in d["notes"]:
            print(f"note: {note}")
    return 0 if diag.feasible() else 1


def _require_buildable(net, params) -> None:
    swallowed = detect_swallowed(net, params)
    if swallowed:
        names = ", ".join(f"{i}-{j}" for i, j in sorted(swallowed))
        raise RodworksError(f"swallowed edges: {names}")
    degenerate = detect_degenerate_nodes(net, params)
    if degenerate:
        names = ", ".join(str(n) for n in sorted(degenerate))
        raise RodworksError(f"degenerate nodes: {names}")


def _write_rods_csv(net, params, path) -> None:
    derived = derive_all(net, params)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("edge,tip,tail,length_mm\n")
        for e in sorted(net.edges):
            d = derived[e]
            fh.write(f"{e[0]}-{e[1]},{d.tip},{d.tail},{d.rod_length:.4f}\n")


def cmd_build(args) -> int:
    net, params = _load(args)
    _require_buildable(net, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for js in build_all_joints(net, params, jobs=args.jobs):
        export_stl(js.mesh, out / f"joint_{js.node:02d}.stl")
    _write_rods_csv(net, params, out / "rods.csv")
    print(f"wrote {net.n_nodes} joints and rods.csv to {out}")
    return 0


def _engrave_seed_for(base: int, node: int) -> int:
    return int(np.random.SeedSequence([base, node]).generate_state(1)[0])


def cmd_engrave(args) -> int:
    net, params = _load(args)
    _require_buildable(net, params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for js in build_all_joints(net, params, jobs=args.jobs):
        ep = EngraveParams.for_joint(
            params,
            js.node,
            sample_count=args.samples,
            k_neighbors=args.k,
            ao_rays=args.ao_rays,
            seed=_engrave_seed_for(args.engrave_seed, js.node),
        )
        export_stl(place_engraving(js.mesh, ep), out / f"joint_{js.node:02d}.stl")
    print(f"wrote {net.n_nodes} engraved joints to {out}")
    return 0


def _make_cutplan(net, params, args):
    derived = derive_all(net, params)
    edges = [e for e in sorted(net.edges) if not derived[e].swallowed]
    return pack_cuts(
        [derived[e].rod_length for e in edges],
        params.stock_length,
        params.stock_end_padding,
        restarts=args.restarts,
        seed=args.seed,
        ids=[(e[0], e[1]) for e in edges],
        kerf=args.kerf,
    )


def cmd_cutplan(args) -> int:
    net, params = _load(args)
    plan = _make_cutplan(net, params, args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(cutplan_svg(plan, 2.0 * params.rod_radius, args.jig_pitch), encoding="utf-8")
    out.with_suffix(".txt").write_text(cutplan_text(plan), encoding="utf-8")
    print(f"{plan.bins_used} stock rods, {plan.waste_total:.1f} mm waste -> {out}")
    return 0


def cmd_order(args) -> int:
    net, params = _load(args)
    plan = assembly_order(net)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(assembly_text(plan, net, params), encoding="utf-8")
    print(f"{len(plan.steps)} steps -> {out}")
    return 0


def cmd_serve(args) -> int:
    net, params = _load(args)
    if args.transport == "ws":
        from .service import serve_websocket

        port = args.port or 8787
        print(f"websocket on ws://127.0.0.1:{port}", flush=True)
        serve_websocket(net, params, port=port)
        return 0
    from .service import serve

    server, port = serve(net, params, port=args.port)
    print(f"listening on 127.0.0.1:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


def export_all(net, params, outdir, seed=0, restarts=200, kerf=0.0, jig_pitch=20.0,
               engrave_seed=0, samples=10000, k=200, ao_rays=64, jobs=1) -> list[str]:
    """Full pipeline: diagnostics, engraved print-ready joints, manifests."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    _require_buildable(net, params)
    joints = build_all_joints(net, params, jobs=jobs)
    parts = [("joint", js.mesh) for js in joints]
    derived = derive_all(net, params)
    for e in sorted(net.edges):
        parts.append(("rod", rod_solid(net, params, e, derived[e])))

    diag_dict = {
        "intersecting_edge_pairs": sorted(
            sorted(map(list, pair)) for pair in detect_rod_intersections(net, params)
        ),
        "swallowed_edges": [],
        "degenerate_nodes": [],
        "balance": balance_check(net, params, parts=parts).to_dict(),
    }
    (out / "diagnostics.json").write_text(
        json.dumps(diag_dict, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    written.append("diagnostics.json")

    for js in joints:
        ep = EngraveParams.for_joint(
            params, js.node,
            sample_count=samples, k_neighbors=k, ao_rays=ao_rays,
            seed=_engrave_seed_for(engrave_seed, js.node),
        )
        engraved = place_engraving(js.mesh, ep)
        rot = print_orientation(net, js.node).rotation
        posed = transform(
            engraved, Affine.from_rotation(rot) @ Affine.translate(-net.nodes[js.node])
        )
        lo, _ = posed.bounds()
        posed = transform(posed, Affine.translate((0.0, 0.0, -lo[2])))
        name = f"joint_{js.node:02d}.stl"
        export_stl(posed, out / name)
        written.append(name)

    _write_rods_csv(net, params, out / "rods.csv")
    written.append("rods.csv")

    class _Opts:
        pass

    opts = _Opts()
    opts.restarts = restarts
    opts.seed = seed
    opts.kerf = kerf
    plan = _make_cutplan(net, params, opts)
    (out / "cutplan.svg").write_text(
        cutplan_svg(plan, 2.0 * params.rod_radius, jig_pitch), encoding="utf-8"
    )
    (out / "cutplan.txt").write_text(cutplan_text(plan), encoding="utf-8")
    written += ["cutplan.svg", "cutplan.txt"]

    (out / "assembly.txt").write_text(
        assembly_text(assembly_order(net), net, params), encoding="utf-8"
    )
    written.append("assembly.txt")
    return written


def cmd_all(args) -> int:
    net, params = _load(args)
    files = export_all(
        net, params, args.out,
        seed=args.seed, restarts=args.restarts, kerf=args.kerf,
        jig_pitch=args.jig_pitch, engrave_seed=args.engrave_seed,
        samples=args.samples, k=args.k, ao_rays=args.ao_rays, jobs=args.jobs,
    )
    print(f"wrote {len(files)} outputs to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
