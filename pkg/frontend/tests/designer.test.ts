import { describe, expect, it } from "vitest";

import { DesignerViewModel, edgeKey, highlightsFrom } from "../src/designer.js";
import { DesignDocument, Diagnostics, SessionClient } from "../src/protocol.js";
import { LoopbackTransport } from "../src/transports.js";

const EMPTY_DIAGNOSTICS: Diagnostics = {
  intersecting_edge_pairs: [],
  swallowed_edges: [],
  degenerate_nodes: [],
  balance: {
    total_mass: 1,
    com: [0, 0, 0],
    com_ground: [0, 0],
    support_polygon: [
      [-1, -1],
      [1, -1],
      [1, 1],
      [-1, 1],
    ],
    stable: true,
    margin: 1,
  },
  notes: [],
  feasible: true,
};

/** Tiny scripted backend: tracks a revision and records ApplyEdit commands. */
function fakeBackend() {
  let revision = 0;
  const commands: unknown[] = [];
  const doc: DesignDocument = {
    nodes: [
      [0, 0, 0],
      [100, 0, 0],
      [0, 100, 0],
    ],
    edges: [[0, 1]],
    params: {
      r: 3, p: 8, sigma: 2, h: 12, eps: 0.15, b: 1000, pad: 10,
      wood_density: 700, plastic_density: 1040,
    },
  };
  const transport = new LoopbackTransport((line) => {
    const req = JSON.parse(line);
    const ok = (data: unknown) => JSON.stringify({ id: req.id, revision, ok: true, data });
    switch (req.op) {
      case "ApplyEdit":
        commands.push(req.args.command);
        revision += 1;
        return ok({ nodes: doc.nodes.length, edges: doc.edges.length });
      case "GetDocument":
        return ok({ document: doc });
      case "GetGeometry":
        return ok({ level: "proxy", rods: [], sockets: [], hulls: [] });
      case "GetDiagnostics":
        return ok(EMPTY_DIAGNOSTICS);
      default:
        return JSON.stringify({ id: req.id, revision, ok: false, error: "unhandled" });
    }
  });
  return { transport, commands };
}

describe("DesignerViewModel gestures", () => {
  it("selection plus translate drag emits a TranslateSelection edit", async () => {
    const { transport, commands } = fakeBackend();
    const vm = new DesignerViewModel(new SessionClient(transport));
    await vm.handleGesture({ kind: "select", nodes: [2, 0] });
    await vm.handleGesture({ kind: "translateDrag", delta: [5, 0, 0] });
    expect(commands).toEqual([
      { type: "TranslateSelection", selection: [0, 2], delta: [5, 0, 0] },
    ]);
  });

  it("connect hotkey uses the node selection", async () => {
    const { transport, commands } = fakeBackend();
    const vm = new DesignerViewModel(new SessionClient(transport));
    await vm.handleGesture({ kind: "select", nodes: [1, 2, 0] });
    await vm.handleGesture({ kind: "hotkey", key: "C" });
    expect(commands).toEqual([{ type: "ConnectSelected", selection: [0, 1, 2] }]);
  });

  it("split hotkey needs exactly one selected rod", async () => {
    const { transport, commands } = fakeBackend();
    const vm = new DesignerViewModel(new SessionClient(transport));
    await vm.handleGesture({ kind: "hotkey", key: "S" });
    expect(commands).toEqual([]);
    await vm.handleGesture({ kind: "select", edges: [[1, 0]] });
    await vm.handleGesture({ kind: "hotkey", key: "S" });
    expect(commands).toEqual([{ type: "SplitEdge", edge: [0, 1] }]);
    expect(vm.selectedEdges.size).toBe(0); // the split rod no longer exists
  });

  it("rod drags edit the diameter, joint drags sigma or h via modifier", async () => {
    const { transport, commands } = fakeBackend();
    const vm = new DesignerViewModel(new SessionClient(transport));
    await vm.handleGesture({ kind: "paramDragStart", target: "rod" });
    await vm.handleGesture({ kind: "paramDragMove", value: 7.0 });
    expect(vm.cursorReadout()).toBe("2r = 7.00 mm");
    await vm.handleGesture({ kind: "paramDragEnd" });

    await vm.handleGesture({ kind: "paramDragStart", target: "joint" });
    await vm.handleGesture({ kind: "paramDragMove", value: 2.5 });
    await vm.handleGesture({ kind: "paramDragEnd" });

    await vm.handleGesture({ kind: "paramDragStart", target: "joint", modifier: true });
    await vm.handleGesture({ kind: "paramDragMove", value: 15 });
    await vm.handleGesture({ kind: "paramDragEnd" });
    expect(vm.cursorReadout()).toBeNull();

    expect(commands).toEqual([
      { type: "SetRadius", value: 3.5 },
      { type: "SetThickness", value: 2.5 },
      { type: "SetSocketLength", value: 15 },
    ]);
  });

  it("only the drag target changes in the outgoing command", async () => {
    const { transport, commands } = fakeBackend();
    const vm = new DesignerViewModel(new SessionClient(transport));
    await vm.handleGesture({ kind: "paramDragStart", target: "rod" });
    await vm.handleGesture({ kind: "paramDragMove", value: 6.5 });
    const command = commands[0] as Record<string, unknown>;
    expect(Object.keys(command).sort()).toEqual(["type", "value"]);
    expect(command.type).toBe("SetRadius");
  });

  it("edits are serialized and counted, never dropped", async () => {
    const { transport, commands } = fakeBackend();
    const vm = new DesignerViewModel(new SessionClient(transport));
    await vm.handleGesture({ kind: "select", nodes: [0] });
    const bursts = [
      vm.handleGesture({ kind: "translateDrag", delta: [1, 0, 0] }),
      vm.handleGesture({ kind: "translateDrag", delta: [2, 0, 0] }),
      vm.handleGesture({ kind: "translateDrag", delta: [3, 0, 0] }),
    ];
    expect(vm.inFlightEdits).toBe(3);
    await Promise.all(bursts);
    expect(vm.inFlightEdits).toBe(0);
    expect(commands.length).toBe(3);
    expect((commands[2] as { delta: number[] }).delta).toEqual([3, 0, 0]);
  });
});

describe("highlight pairing", () => {
  const problem: Diagnostics = {
    ...EMPTY_DIAGNOSTICS,
    intersecting_edge_pairs: [
      [
        [0, 1],
        [2, 3],
      ],
    ],
    swallowed_edges: [[4, 5]],
    degenerate_nodes: [7],
    balance: { ...EMPTY_DIAGNOSTICS.balance, stable: false },
    feasible: false,
  };

  it("derives red sets from diagnostics", () => {
    const h = highlightsFrom(3, problem);
    expect(h.redEdges).toEqual(["0-1", "2-3", "4-5"]);
    expect(h.redNodes).toEqual([4, 5, 7]);
    expect(h.unstableBalance).toBe(true);
    expect(h.revision).toBe(3);
  });

  it("edge keys are order independent", () => {
    expect(edgeKey([9, 2])).toBe("2-9");
    expect(edgeKey([2, 9])).toBe("2-9");
  });

  it("refresh pairs highlights with the displayed geometry revision", async () => {
    const { transport } = fakeBackend();
    const client = new SessionClient(transport);
    const vm = new DesignerViewModel(client);
    await vm.refresh();
    const shown = vm.displayedHighlights();
    expect(shown).not.toBeNull();
    expect(shown!.revision).toBe(vm.displayedGeometry()!.revision);
  });
});
