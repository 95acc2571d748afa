/**
 * Fabrication-aware design editing: selection, manipulation gestures,
 * parameter drags with a live readout, and problem highlighting.
 *
 * The view model is a pure function of the latest backend snapshots plus
 * local gesture state; every gesture that changes the document goes through
 * ApplyEdit, and highlights are only shown when they describe the same
 * revision as the geometry on screen.
 */

import {
  Diagnostics,
  DesignDocument,
  EditCommand,
  ProxyGeometry,
  SessionClient,
  Vec3,
} from "./protocol.js";

export type ParamTarget = "rod" | "joint";

export type Gesture =
  | { kind: "select"; nodes?: number[]; edges?: [number, number][]; additive?: boolean }
  | { kind: "clearSelection" }
  | { kind: "translateDrag"; delta: Vec3 }
  | { kind: "rotateDrag"; axis: Vec3; angle: number; pivot: Vec3 }
  | { kind: "scaleDrag"; factor: number; pivot: Vec3 }
  | { kind: "hotkey"; key: "C" | "S" }
  | { kind: "paramDragStart"; target: ParamTarget; modifier?: boolean }
  | { kind: "paramDragMove"; value: number }
  | { kind: "paramDragEnd" }
  | { kind: "setProfile"; value: number | "circular" };

export interface DragState {
  target: ParamTarget;
  /** which scalar the drag edits: rod -> "r"; joint -> "sigma", or "h" with the modifier held */
  param: "r" | "sigma" | "h";
  /** live value rendered next to the cursor while dragging */
  liveValue: number | null;
}

export interface HighlightSets {
  revision: number;
  redEdges: string[]; // canonical "i-j", sorted
  redNodes: number[]; // sorted
  unstableBalance: boolean;
  comGround: [number, number] | null;
  supportPolygon: [number, number][] | null;
}

export interface GeometrySnapshot {
  revision: number;
  proxy: ProxyGeometry;
}

export function edgeKey(edge: [number, number]): string {
  const [i, j] = edge[0] <= edge[1] ? edge : [edge[1], edge[0]];
  return `${i}-${j}`;
}

/** Red parts derived from one diagnostics payload. */
export function highlightsFrom(revision: number, diag: Diagnostics): HighlightSets {
  const redEdges = new Set<string>();
  const redNodes = new Set<number>();
  for (const pair of diag.intersecting_edge_pairs) {
    for (const edge of pair) {
      redEdges.add(edgeKey(edge));
    }
  }
  for (const edge of diag.swallowed_edges) {
    redEdges.add(edgeKey(edge));
    redNodes.add(edge[0]); // swallowing is a joint problem: flag both joints
    redNodes.add(edge[1]);
  }
  for (const node of diag.degenerate_nodes) {
    redNodes.add(node);
  }
  const unstable = diag.balance.stable === false;
  return {
    revision,
    redEdges: [...redEdges].sort(),
    redNodes: [...redNodes].sort((a, b) => a - b),
    unstableBalance: unstable,
    comGround: diag.balance.com_ground,
    supportPolygon: diag.balance.support_polygon,
  };
}

export class DesignerViewModel {
  selectedNodes = new Set<number>();
  selectedEdges = new Set<string>();
  drag: DragState | null = null;
  connectionLost = false;

  private document: DesignDocument | null = null;
  private geometry: GeometrySnapshot | null = null;
  private highlights: HighlightSets | null = null;
  private editChain: Promise<unknown> = Promise.resolve();
  private pendingEdits = 0;

  constructor(private client: SessionClient) {}

  get inFlightEdits(): number {
    return this.pendingEdits;
  }

  currentDocument(): DesignDocument | null {
    return this.document;
  }

  displayedGeometry(): GeometrySnapshot | null {
    return this.geometry;
  }

  /** Highlights for the revision being displayed — never a newer one. */
  displayedHighlights(): HighlightSets | null {
    if (!this.geometry || !this.highlights) {
      return null;
    }
    return this.highlights.revision === this.geometry.revision ? this.highlights : null;
  }

  async load(document: DesignDocument): Promise<void> {
    await this.client.loadDocument(document);
    await this.refresh();
  }

  async refresh(): Promise<void> {
    try {
      const doc = await this.client.getDocument();
      this.document = doc.document;
      const revision = this.client.latestRevision;
      const proxy = await this.client.getGeometry("proxy");
      this.geometry = { revision, proxy };
      const { revision: diagRevision, diagnostics } = await this.client.getDiagnostics();
      this.highlights = highlightsFrom(diagRevision, diagnostics);
      this.connectionLost = false;
    } catch (err) {
      this.connectionLost = true;
      throw err;
    }
  }

  /** Queue an edit; edits are serialized and never silently dropped. */
  private applyEdit(command: EditCommand): Promise<void> {
    this.pendingEdits += 1;
    const next = this.editChain
      .then(() => this.client.applyEdit(command))
      .then(() => this.refresh())
      .finally(() => {
        this.pendingEdits -= 1;
      });
    this.editChain = next.catch(() => undefined); // keep the chain alive on errors
    return next as Promise<void>;
  }

  async handleGesture(gesture: Gesture): Promise<void> {
    switch (gesture.kind) {
      case "select": {
        if (!gesture.additive) {
          this.selectedNodes.clear();
          this.selectedEdges.clear();
        }
        for (const n of gesture.nodes ?? []) {
          this.selectedNodes.add(n);
        }
        for (const e of gesture.edges ?? []) {
          this.selectedEdges.add(edgeKey(e));
        }
        return;
      }
      case "clearSelection":
        this.selectedNodes.clear();
        this.selectedEdges.clear();
        return;
      case "translateDrag":
        return this.applyEdit({
          type: "TranslateSelection",
          selection: [...this.selectedNodes].sort((a, b) => a - b),
          delta: gesture.delta,
        });
      case "rotateDrag":
        return this.applyEdit({
          type: "RotateSelection",
          selection: [...this.selectedNodes].sort((a, b) => a - b),
          axis: gesture.axis,
          angle: gesture.angle,
          pivot: gesture.pivot,
        });
      case "scaleDrag":
        return this.applyEdit({
          type: "ScaleSelection",
          selection: [...this.selectedNodes].sort((a, b) => a - b),
          factor: gesture.factor,
          pivot: gesture.pivot,
        });
      case "hotkey": {
        if (gesture.key === "C") {
          return this.applyEdit({
            type: "ConnectSelected",
            selection: [...this.selectedNodes].sort((a, b) => a - b),
          });
        }
        // split: acts on a single selected rod
        const selected = [...this.selectedEdges];
        if (selected.length !== 1) {
          return;
        }
        const [i, j] = selected[0].split("-").map(Number);
        this.selectedEdges.clear();
        return this.applyEdit({ type: "SplitEdge", edge: [i, j] });
      }
      case "paramDragStart": {
        const param =
          gesture.target === "rod" ? "r" : gesture.modifier ? "h" : "sigma";
        this.drag = { target: gesture.target, param, liveValue: null };
        return;
      }
      case "paramDragMove": {
        if (!this.drag) {
          return;
        }
        this.drag.liveValue = gesture.value;
        const command: EditCommand =
          this.drag.param === "r"
            ? { type: "SetRadius", value: gesture.value / 2.0 } // dragging edits the diameter 2r
            : this.drag.param === "sigma"
              ? { type: "SetThickness", value: gesture.value }
              : { type: "SetSocketLength", value: gesture.value };
        return this.applyEdit(command);
      }
      case "paramDragEnd":
        this.drag = null;
        return;
      case "setProfile":
        return this.applyEdit({ type: "SetProfileSides", value: gesture.value });
    }
  }

  /** Text shown next to the cursor while a parameter drag is active. */
  cursorReadout(): string | null {
    if (!this.drag || this.drag.liveValue === null) {
      return null;
    }
    const label =
      this.drag.param === "r" ? "2r" : this.drag.param === "sigma" ? "sigma" : "h";
    return `${label} = ${this.drag.liveValue.toFixed(2)} mm`;
  }
}

/** Replay a recorded gesture log against a live backend, serially. */
export async function replayGestures(
  viewModel: DesignerViewModel,
  log: Gesture[],
): Promise<void> {
  for (const gesture of log) {
    await viewModel.handleGesture(gesture);
  }
}
