import { describe, expect, it } from "vitest";

import { SessionClient, canonicalJson, decodeMesh } from "../src/protocol.js";
import { LoopbackTransport } from "../src/transports.js";

describe("SessionClient", () => {
  it("matches responses to request ids and tracks revisions", async () => {
    const transport = new LoopbackTransport((line) => {
      const req = JSON.parse(line);
      return JSON.stringify({ id: req.id, revision: 7, ok: true, data: { echo: req.op } });
    });
    const client = new SessionClient(transport);
    const a = client.call<{ echo: string }>("GetDiagnostics");
    const b = client.call<{ echo: string }>("GetAssemblyPlan");
    expect((await a).echo).toBe("GetDiagnostics");
    expect((await b).echo).toBe("GetAssemblyPlan");
    expect(client.latestRevision).toBe(7);
  });

  it("raises on error responses", async () => {
    const transport = new LoopbackTransport((line) => {
      const req = JSON.parse(line);
      return JSON.stringify({ id: req.id, revision: 0, ok: false, error: "nope" });
    });
    const client = new SessionClient(transport);
    await expect(client.call("ApplyEdit", {})).rejects.toThrow("nope");
  });

  it("ignores unparseable frames without dropping later ones", async () => {
    let first = true;
    const transport = new LoopbackTransport((line) => {
      const req = JSON.parse(line);
      if (first) {
        first = false;
        return "not json";
      }
      return JSON.stringify({ id: req.id, revision: 1, ok: true, data: 42 });
    });
    const client = new SessionClient(transport);
    const hung = client.request("GetDiagnostics");
    const fine = client.call<number>("GetDiagnostics");
    expect(await fine).toBe(42);
    // the first request never resolves (its frame was garbage), but the
    // client itself stays usable
    let resolved = false;
    void hung.then(() => {
      resolved = true;
    });
    await new Promise((r) => setTimeout(r, 10));
    expect(resolved).toBe(false);
  });
});

describe("canonicalJson", () => {
  it("sorts keys recursively", () => {
    expect(canonicalJson({ b: 1, a: { d: 2, c: [3, { f: 4, e: 5 }] } })).toBe(
      '{"a":{"c":[3,{"e":5,"f":4}],"d":2},"b":1}',
    );
  });

  it("reproduces numbers exactly", () => {
    expect(canonicalJson({ x: 201.2201 })).toBe('{"x":201.2201}');
  });
});

describe("decodeMesh", () => {
  it("roundtrips little-endian buffers", () => {
    const vertices = new Float64Array([0, 0, 0, 1, 0, 0, 0, 1, 0]);
    const faces = new Int32Array([0, 1, 2]);
    const payload = {
      vertex_count: 3,
      face_count: 1,
      vertices_b64: Buffer.from(vertices.buffer).toString("base64"),
      faces_b64: Buffer.from(faces.buffer).toString("base64"),
    };
    const decoded = decodeMesh(payload);
    expect([...decoded.vertices]).toEqual([...vertices]);
    expect([...decoded.faces]).toEqual([0, 1, 2]);
  });
});
