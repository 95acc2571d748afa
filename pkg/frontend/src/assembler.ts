/**
 * Guided assembly: hotkey-driven stepping through the plan with a
 * focus+context partition and camera framing per step.
 */

import { AssemblyPlan, AssemblyStep, DesignDocument, Vec3 } from "./protocol.js";

export type RenderClass = "focus" | "context" | "future";

export interface StepRender {
  index: number;
  done: boolean;
  focus: {
    id: string;
    kind: "joint" | "rod";
    /** joints show their engraved two-digit ID in a large font */
    label: string | null;
    /** rods show their cut length */
    lengthMm: number | null;
  } | null;
  /** already placed, recessed toward the background color */
  context: string[];
  /** yet to come: joints as dots, rods as line segments */
  future: { nodes: number[]; edges: [number, number][] };
  cameraTarget: Vec3;
  framingRadius: number;
}

export function partId(step: AssemblyStep): string {
  if (step.kind === "joint") {
    return `joint:${String(step.part as number).padStart(2, "0")}`;
  }
  const [i, j] = step.part as [number, number];
  return `rod:${i}-${j}`;
}

export class AssemblerViewModel {
  private index = 0;
  /** camera easing target, updated on step changes */
  cameraAnimating = false;

  constructor(
    private plan: AssemblyPlan,
    private document: DesignDocument,
    private rodLengths: Map<string, number>,
  ) {}

  get currentIndex(): number {
    return this.index;
  }

  /** Advance hotkey; clamps at the completion screen past the last step. */
  advance(): void {
    if (this.index < this.plan.steps.length) {
      this.index += 1;
      this.cameraAnimating = true;
    }
  }

  /** Back hotkey; no-op at step 0. */
  back(): void {
    if (this.index > 0) {
      this.index -= 1;
      this.cameraAnimating = true;
    }
  }

  isComplete(): boolean {
    return this.index >= this.plan.steps.length;
  }

  render(): StepRender {
    const steps = this.plan.steps;
    if (this.isComplete()) {
      return {
        index: steps.length,
        done: true,
        focus: null,
        context: steps.map(partId),
        future: { nodes: [], edges: [] },
        cameraTarget: this.documentCenter(),
        framingRadius: this.documentRadius(),
      };
    }
    const step = steps[this.index];
    const futureNodes: number[] = [];
    const futureEdges: [number, number][] = [];
    for (const s of steps.slice(this.index + 1)) {
      if (s.kind === "joint") {
        futureNodes.push(s.part as number);
      } else {
        futureEdges.push(s.part as [number, number]);
      }
    }
    const { target, radius } = this.framing(step);
    return {
      index: this.index,
      done: false,
      focus: {
        id: partId(step),
        kind: step.kind,
        label:
          step.kind === "joint"
            ? String(step.part as number).padStart(2, "0")
            : null,
        lengthMm:
          step.kind === "rod"
            ? (this.rodLengths.get(edgeName(step.part as [number, number])) ?? null)
            : null,
      },
      context: steps.slice(0, this.index).map(partId),
      future: { nodes: futureNodes, edges: futureEdges },
      cameraTarget: target,
      framingRadius: radius,
    };
  }

  renderClassOf(step: AssemblyStep): RenderClass {
    const position = this.plan.steps.indexOf(step);
    if (position === this.index) {
      return "focus";
    }
    return position < this.index ? "context" : "future";
  }

  /** Center on the focus part, framed so every connected part fits. */
  private framing(step: AssemblyStep): { target: Vec3; radius: number } {
    const nodes = this.document.nodes;
    const reach = 2.0 * (this.document.params.h + this.document.params.sigma);
    if (step.kind === "joint") {
      const node = step.part as number;
      const target = nodes[node];
      let radius = 0;
      for (const [i, j] of this.document.edges) {
        if (i === node || j === node) {
          const other = nodes[i === node ? j : i];
          radius = Math.max(radius, distance(target, other));
        }
      }
      return { target, radius: radius + reach };
    }
    const [i, j] = step.part as [number, number];
    const target: Vec3 = [
      (nodes[i][0] + nodes[j][0]) / 2,
      (nodes[i][1] + nodes[j][1]) / 2,
      (nodes[i][2] + nodes[j][2]) / 2,
    ];
    const radius = Math.max(distance(target, nodes[i]), distance(target, nodes[j]));
    return { target, radius: radius + reach };
  }

  private documentCenter(): Vec3 {
    const nodes = this.document.nodes;
    const sum: Vec3 = [0, 0, 0];
    for (const p of nodes) {
      sum[0] += p[0];
      sum[1] += p[1];
      sum[2] += p[2];
    }
    const n = Math.max(nodes.length, 1);
    return [sum[0] / n, sum[1] / n, sum[2] / n];
  }

  private documentRadius(): number {
    const center = this.documentCenter();
    let radius = 0;
    for (const p of this.document.nodes) {
      radius = Math.max(radius, distance(center, p));
    }
    return radius;
  }
}

function edgeName(edge: [number, number]): string {
  const [i, j] = edge[0] <= edge[1] ? edge : [edge[1], edge[0]];
  return `${i}-${j}`;
}

function distance(a: Vec3, b: Vec3): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}
