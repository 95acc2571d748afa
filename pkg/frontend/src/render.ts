/**
 * Canvas renderer: orthographic tumble view of the proxy geometry with
 * problem highlighting and focus+context shading. Deliberately dependency
 * free; meshes arrive as typed arrays from the session protocol.
 */

import { DesignDocument, MeshPayload, Vec3, decodeMesh } from "./protocol.js";
import { HighlightSets, edgeKey } from "./designer.js";
import { RenderClass } from "./assembler.js";

export interface Camera {
  target: Vec3;
  distance: number;
  yaw: number;
  pitch: number;
}

export const BACKGROUND = "#2b6e6e"; // non-white so recessed parts can fade into it
const ROD_COLOR = "#9c6b3f"; // wood
const JOINT_COLOR = "#f2f2ee"; // printed plastic
const PROBLEM_COLOR = "#e03131";

export function defaultCamera(doc: DesignDocument): Camera {
  let lo: Vec3 = [Infinity, Infinity, Infinity];
  let hi: Vec3 = [-Infinity, -Infinity, -Infinity];
  for (const p of doc.nodes) {
    for (let k = 0; k < 3; k++) {
      lo[k] = Math.min(lo[k], p[k]);
      hi[k] = Math.max(hi[k], p[k]);
    }
  }
  const target: Vec3 = [(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2];
  const radius = Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) / 2 || 100;
  return { target, distance: radius * 2.2, yaw: 0.6, pitch: 0.45 };
}

export function project(camera: Camera, p: Vec3, width: number, height: number): [number, number, number] {
  const cy = Math.cos(camera.yaw);
  const sy = Math.sin(camera.yaw);
  const cp = Math.cos(camera.pitch);
  const sp = Math.sin(camera.pitch);
  const x = p[0] - camera.target[0];
  const y = p[1] - camera.target[1];
  const z = p[2] - camera.target[2];
  const rx = cy * x + sy * y;
  const ry = -sy * cp * x + cy * cp * y + sp * z;
  const depth = sy * sp * x - cy * sp * y + cp * z;
  const scale = Math.min(width, height) / (2.0 * camera.distance);
  return [width / 2 + rx * scale, height / 2 - ry * scale, depth];
}

function shade(base: string, toward: string, amount: number): string {
  const parse = (c: string) => [1, 3, 5].map((i) => parseInt(c.slice(i, i + 2), 16));
  const a = parse(base);
  const b = parse(toward);
  const mix = a.map((v, i) => Math.round(v + (b[i] - v) * amount));
  return `#${mix.map((v) => v.toString(16).padStart(2, "0")).join("")}`;
}

export interface DrawablePart {
  id: string;
  kind: "rod" | "joint";
  mesh: MeshPayload;
  edge?: [number, number];
  node?: number;
}

export class StudioRenderer {
  constructor(private ctx: CanvasRenderingContext2D, private width: number, private height: number) {}

  clear(): void {
    this.ctx.fillStyle = BACKGROUND;
    this.ctx.fillRect(0, 0, this.width, this.height);
  }

  /** Wireframe a mesh payload with backface-free edge strokes. */
  drawMesh(camera: Camera, part: DrawablePart, renderClass: RenderClass, red: boolean): void {
    const { vertices, faces } = decodeMesh(part.mesh);
    const base = part.kind === "rod" ? ROD_COLOR : JOINT_COLOR;
    let color = red ? PROBLEM_COLOR : base;
    if (renderClass === "context") {
      color = shade(color, BACKGROUND, 0.6); // recessed toward the background
    }
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = renderClass === "focus" ? 1.6 : 0.8;
    this.ctx.globalAlpha = renderClass === "context" ? 0.7 : 1.0;
    this.ctx.beginPath();
    for (let f = 0; f < faces.length; f += 3) {
      const tri = [faces[f], faces[f + 1], faces[f + 2]].map((vi) =>
        this.projectVertex(camera, vertices, vi),
      );
      this.ctx.moveTo(tri[0][0], tri[0][1]);
      this.ctx.lineTo(tri[1][0], tri[1][1]);
      this.ctx.lineTo(tri[2][0], tri[2][1]);
      this.ctx.closePath();
    }
    this.ctx.stroke();
    this.ctx.globalAlpha = 1.0;
  }

  /** Future parts as dots and line segments. */
  drawFuture(camera: Camera, doc: DesignDocument, nodes: number[], edges: [number, number][]): void {
    this.ctx.fillStyle = "#d8e8e8";
    for (const n of nodes) {
      const [x, y] = project(camera, doc.nodes[n], this.width, this.height);
      this.ctx.beginPath();
      this.ctx.arc(x, y, 3, 0, 2 * Math.PI);
      this.ctx.fill();
    }
    this.ctx.strokeStyle = "#bcd4d4";
    this.ctx.setLineDash([4, 4]);
    this.ctx.beginPath();
    for (const [i, j] of edges) {
      const a = project(camera, doc.nodes[i], this.width, this.height);
      const b = project(camera, doc.nodes[j], this.width, this.height);
      this.ctx.moveTo(a[0], a[1]);
      this.ctx.lineTo(b[0], b[1]);
    }
    this.ctx.stroke();
    this.ctx.setLineDash([]);
  }

  /** Center-of-mass marker and support polygon; red when unstable. */
  drawBalance(camera: Camera, highlights: HighlightSets): void {
    if (!highlights.comGround || !highlights.supportPolygon) {
      return;
    }
    const color = highlights.unstableBalance ? PROBLEM_COLOR : "#9fd89f";
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = 1.2;
    this.ctx.beginPath();
    const poly = highlights.supportPolygon;
    for (let i = 0; i <= poly.length; i++) {
      const [px, py] = poly[i % poly.length];
      const [x, y] = project(camera, [px, py, 0], this.width, this.height);
      if (i === 0) {
        this.ctx.moveTo(x, y);
      } else {
        this.ctx.lineTo(x, y);
      }
    }
    this.ctx.stroke();
    const [cx, cy] = highlights.comGround;
    const [x, y] = project(camera, [cx, cy, 0], this.width, this.height);
    this.ctx.fillStyle = color;
    this.ctx.beginPath();
    this.ctx.arc(x, y, 5, 0, 2 * Math.PI);
    this.ctx.fill();
  }

  /** Cursor-adjacent readout while a parameter drag is active. */
  drawReadout(text: string, cursorX: number, cursorY: number): void {
    this.ctx.font = "13px system-ui, sans-serif";
    this.ctx.fillStyle = "#ffffff";
    this.ctx.fillText(text, cursorX + 14, cursorY - 8);
  }

  /** Large engraved-style ID for the focused joint step. */
  drawJointLabel(label: string): void {
    this.ctx.font = "bold 64px system-ui, sans-serif";
    this.ctx.fillStyle = "#ffffff";
    this.ctx.fillText(label, 24, 76);
  }

  private projectVertex(
    camera: Camera,
    vertices: Float64Array,
    vi: number,
  ): [number, number, number] {
    return project(
      camera,
      [vertices[3 * vi], vertices[3 * vi + 1], vertices[3 * vi + 2]],
      this.width,
      this.height,
    );
  }
}

export function isRed(highlights: HighlightSets | null, part: DrawablePart): boolean {
  if (!highlights) {
    return false;
  }
  if (part.kind === "rod" && part.edge) {
    return highlights.redEdges.includes(edgeKey(part.edge));
  }
  if (part.kind === "joint" && part.node !== undefined) {
    return highlights.redNodes.includes(part.node);
  }
  return false;
}
