/** Session protocol types and the line-oriented client. */

export type Vec3 = [number, number, number];

export interface DocumentParams {
  r: number;
  p: number | "circular";
  sigma: number;
  h: number;
  eps: number;
  b: number;
  pad: number;
  wood_density: number;
  plastic_density: number;
}

export interface DesignDocument {
  nodes: Vec3[];
  edges: [number, number][];
  params: DocumentParams;
}

export type EditCommand =
  | { type: "TranslateSelection"; selection: number[]; delta: Vec3 }
  | { type: "RotateSelection"; selection: number[]; axis: Vec3; angle: number; pivot: Vec3 }
  | { type: "ScaleSelection"; selection: number[]; factor: number; pivot: Vec3 }
  | { type: "ConnectSelected"; selection: number[] }
  | { type: "SplitEdge"; edge: [number, number] }
  | { type: "SetRadius"; value: number }
  | { type: "SetThickness"; value: number }
  | { type: "SetSocketLength"; value: number }
  | { type: "SetProfileSides"; value: number | "circular" };

export interface MeshPayload {
  vertex_count: number;
  face_count: number;
  vertices_b64: string;
  faces_b64: string;
}

export interface RodPayload extends MeshPayload {
  edge: [number, number];
  length_mm: number;
}

export interface SocketPayload extends MeshPayload {
  node: number;
  edge: [number, number];
}

export interface ProxyGeometry {
  level: "proxy";
  rods: RodPayload[];
  sockets: SocketPayload[];
  hulls: ({ node: number } & MeshPayload)[];
}

export interface BalanceReport {
  total_mass: number | null;
  com: Vec3 | null;
  com_ground: [number, number] | null;
  support_polygon: [number, number][] | null;
  stable: boolean | null;
  margin: number | null;
}

export interface Diagnostics {
  intersecting_edge_pairs: [number, number][][];
  swallowed_edges: [number, number][];
  degenerate_nodes: number[];
  balance: BalanceReport;
  notes: string[];
  feasible: boolean;
}

export interface AssemblyStep {
  kind: "joint" | "rod";
  part: number | [number, number];
}

export interface AssemblyPlan {
  steps: AssemblyStep[];
}

export interface Response<T = unknown> {
  id: number | null;
  revision: number;
  ok: boolean;
  data?: T;
  error?: string;
}

/** One JSON object per message in both directions. */
export interface Transport {
  send(line: string): void;
  onMessage(handler: (line: string) => void): void;
  close(): void;
}

export class ProtocolError extends Error {}

/**
 * Request/response matching over a Transport; tracks the latest revision
 * seen so view models can pair data with the document state it describes.
 */
export class SessionClient {
  private nextId = 1;
  private pending = new Map<number, (resp: Response) => void>();
  latestRevision = 0;

  constructor(private transport: Transport) {
    transport.onMessage((line) => this.dispatch(line));
  }

  private dispatch(line: string): void {
    let resp: Response;
    try {
      resp = JSON.parse(line) as Response;
    } catch {
      return; // garbage frame; nothing correlatable
    }
    if (typeof resp.revision === "number" && resp.revision > this.latestRevision) {
      this.latestRevision = resp.revision;
    }
    if (resp.id !== null && this.pending.has(resp.id as number)) {
      const resolve = this.pending.get(resp.id as number)!;
      this.pending.delete(resp.id as number);
      resolve(resp);
    }
  }

  request<T>(op: string, args?: unknown): Promise<Response<T>> {
    const id = this.nextId++;
    const line = JSON.stringify({ id, op, args: args ?? {} });
    return new Promise((resolve) => {
      this.pending.set(id, resolve as (resp: Response) => void);
      this.transport.send(line);
    });
  }

  async call<T>(op: string, args?: unknown): Promise<T> {
    const resp = await this.request<T>(op, args);
    if (!resp.ok) {
      throw new ProtocolError(resp.error ?? `op ${op} failed`);
    }
    return resp.data as T;
  }

  loadDocument(document: DesignDocument) {
    return this.call<{ nodes: number; edges: number }>("LoadDocument", { document });
  }

  applyEdit(command: EditCommand) {
    return this.call<{ nodes: number; edges: number }>("ApplyEdit", { command });
  }

  getDocument() {
    return this.call<{ document: DesignDocument }>("GetDocument");
  }

  getGeometry(level: "proxy" | "full") {
    return this.call<ProxyGeometry>("GetGeometry", { level });
  }

  async getDiagnostics(): Promise<{ revision: number; diagnostics: Diagnostics }> {
    const resp = await this.request<Diagnostics>("GetDiagnostics");
    if (!resp.ok) {
      throw new ProtocolError(resp.error ?? "GetDiagnostics failed");
    }
    return { revision: resp.revision, diagnostics: resp.data as Diagnostics };
  }

  getAssemblyPlan() {
    return this.call<AssemblyPlan>("GetAssemblyPlan");
  }

  close(): void {
    this.transport.close();
  }
}

/** Decode a mesh payload into typed arrays (little-endian f64 / i32). */
export function decodeMesh(payload: MeshPayload): {
  vertices: Float64Array;
  faces: Int32Array;
} {
  return {
    vertices: new Float64Array(base64ToBytes(payload.vertices_b64).buffer),
    faces: new Int32Array(base64ToBytes(payload.faces_b64).buffer),
  };
}

function base64ToBytes(b64: string): Uint8Array {
  if (typeof Buffer !== "undefined") {
    const buf = Buffer.from(b64, "base64");
    return new Uint8Array(buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength));
  }
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) {
    out[i] = bin.charCodeAt(i);
  }
  return out;
}

/** Stable stringify (sorted keys) so document hashes are reproducible. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return `[${value.map(canonicalJson).join(",")}]`;
  }
  const entries = Object.entries(value as Record<string, unknown>)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([k, v]) => `${JSON.stringify(k)}:${canonicalJson(v)}`);
  return `{${entries.join(",")}}`;
}
