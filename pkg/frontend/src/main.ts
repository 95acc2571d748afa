/**
 * Browser entry: connects to `rodworks serve --transport ws`, wires mouse
 * and hotkey input into the designer/assembler view models, and renders to
 * a canvas. Space advances the assembly, Backspace steps back, C connects
 * the selection, S splits the selected rod, Tab switches modes.
 */

import { AssemblerViewModel } from "./assembler.js";
import { DesignerViewModel } from "./designer.js";
import { SessionClient } from "./protocol.js";
import { Camera, DrawablePart, StudioRenderer, defaultCamera, isRed, project } from "./render.js";
import { WebSocketTransport } from "./transports.js";

type Mode = "designer" | "assembler";

async function start(): Promise<void> {
  const canvas = document.getElementById("studio") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const banner = document.getElementById("banner")!;
  const url = new URLSearchParams(location.search).get("ws") ?? "ws://127.0.0.1:8787";

  let client: SessionClient;
  try {
    client = new SessionClient(await WebSocketTransport.connect(url));
  } catch {
    banner.textContent = `connection lost: ${url}`;
    return;
  }

  const designer = new DesignerViewModel(client);
  await designer.refresh();
  const doc = designer.currentDocument()!;
  let camera: Camera = defaultCamera(doc);
  let mode: Mode = "designer";
  let assembler: AssemblerViewModel | null = null;
  let cursor: [number, number] = [0, 0];

  const renderer = new StudioRenderer(ctx, canvas.width, canvas.height);

  function parts(): DrawablePart[] {
    const geometry = designer.displayedGeometry();
    if (!geometry) {
      return [];
    }
    const out: DrawablePart[] = [];
    for (const rod of geometry.proxy.rods) {
      out.push({ id: `rod:${rod.edge[0]}-${rod.edge[1]}`, kind: "rod", mesh: rod, edge: rod.edge });
    }
    for (const socket of geometry.proxy.sockets) {
      out.push({ id: `socket:${socket.node}:${socket.edge}`, kind: "joint", mesh: socket, node: socket.node });
    }
    for (const hull of geometry.proxy.hulls) {
      out.push({ id: `hull:${hull.node}`, kind: "joint", mesh: hull, node: hull.node });
    }
    return out;
  }

  function draw(): void {
    renderer.clear();
    const highlights = designer.displayedHighlights();
    if (mode === "designer") {
      for (const part of parts()) {
        renderer.drawMesh(camera, part, "focus", isRed(highlights, part));
      }
      if (highlights) {
        renderer.drawBalance(camera, highlights);
      }
      const readout = designer.cursorReadout();
      if (readout) {
        renderer.drawReadout(readout, cursor[0], cursor[1]);
      }
    } else if (assembler) {
      const view = assembler.render();
      const focusId = view.focus?.id ?? null;
      const placed = new Set(view.context);
      for (const part of parts()) {
        const cls = part.id === focusId ? "focus" : placed.has(part.id) ? "context" : "future";
        if (cls !== "future") {
          renderer.drawMesh(camera, part, cls, false);
        }
      }
      renderer.drawFuture(camera, doc, view.future.nodes, view.future.edges);
      if (view.focus?.label) {
        renderer.drawJointLabel(view.focus.label);
      }
      camera = { ...camera, target: view.cameraTarget, distance: view.framingRadius * 2.5 };
    }
    banner.textContent = designer.connectionLost ? "connection lost" : "";
  }

  canvas.addEventListener("mousemove", (ev) => {
    cursor = [ev.offsetX, ev.offsetY];
    if (ev.buttons === 4) {
      camera = { ...camera, yaw: camera.yaw + ev.movementX * 0.01, pitch: camera.pitch + ev.movementY * 0.01 };
      draw();
    }
  });

  canvas.addEventListener("click", (ev) => {
    // nearest node within 12 px becomes the selection
    const current = designer.currentDocument();
    if (!current || mode !== "designer") {
      return;
    }
    let best: number | null = null;
    let bestDist = 12;
    current.nodes.forEach((p, i) => {
      const [x, y] = project(camera, p, canvas.width, canvas.height);
      const d = Math.hypot(x - ev.offsetX, y - ev.offsetY);
      if (d < bestDist) {
        best = i;
        bestDist = d;
      }
    });
    void designer
      .handleGesture(
        best === null
          ? { kind: "clearSelection" }
          : { kind: "select", nodes: [best], additive: ev.shiftKey },
      )
      .then(draw);
  });

  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Tab") {
      ev.preventDefault();
      if (mode === "designer") {
        void Promise.all([client.getAssemblyPlan(), client.getGeometry("proxy")]).then(
          ([plan, proxy]) => {
            const lengths = new Map(proxy.rods.map((r) => [`${r.edge[0]}-${r.edge[1]}`, r.length_mm]));
            assembler = new AssemblerViewModel(plan, designer.currentDocument()!, lengths);
            mode = "assembler";
            draw();
          },
        );
      } else {
        mode = "designer";
        draw();
      }
      return;
    }
    if (mode === "assembler" && assembler) {
      if (ev.key === " ") {
        assembler.advance();
      } else if (ev.key === "Backspace") {
        assembler.back();
      }
      draw();
      return;
    }
    if (ev.key === "c" || ev.key === "C") {
      void designer.handleGesture({ kind: "hotkey", key: "C" }).then(draw);
    } else if (ev.key === "s" || ev.key === "S") {
      void designer.handleGesture({ kind: "hotkey", key: "S" }).then(draw);
    }
  });

  draw();
}

void start();
