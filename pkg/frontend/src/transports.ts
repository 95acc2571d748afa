/** Transports for the session protocol: TCP (node) and WebSocket (browser). */

import type { Transport } from "./protocol.js";

/** Newline-delimited JSON over TCP, for tooling and tests under node. */
export class TcpTransport implements Transport {
  private socket: import("node:net").Socket;
  private buffer = "";
  private handlers: ((line: string) => void)[] = [];

  private constructor(socket: import("node:net").Socket) {
    this.socket = socket;
    socket.setEncoding("utf-8");
    socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let idx;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, idx);
        this.buffer = this.buffer.slice(idx + 1);
        if (line.trim()) {
          for (const handler of this.handlers) {
            handler(line);
          }
        }
      }
    });
  }

  static async connect(host: string, port: number): Promise<TcpTransport> {
    const net = await import("node:net");
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () =>
        resolve(new TcpTransport(socket)),
      );
      socket.once("error", reject);
    });
  }

  send(line: string): void {
    this.socket.write(line + "\n");
  }

  onMessage(handler: (line: string) => void): void {
    this.handlers.push(handler);
  }

  close(): void {
    this.socket.end();
    this.socket.destroy();
  }
}

/** One JSON object per text frame, for browsers. */
export class WebSocketTransport implements Transport {
  private handlers: ((line: string) => void)[] = [];

  private constructor(private socket: WebSocket) {
    socket.addEventListener("message", (event: MessageEvent) => {
      if (typeof event.data === "string") {
        for (const handler of this.handlers) {
          handler(event.data);
        }
      }
    });
  }

  static connect(url: string): Promise<WebSocketTransport> {
    return new Promise((resolve, reject) => {
      const socket = new WebSocket(url);
      socket.addEventListener("open", () => resolve(new WebSocketTransport(socket)));
      socket.addEventListener("error", (event) => reject(event));
    });
  }

  send(line: string): void {
    this.socket.send(line);
  }

  onMessage(handler: (line: string) => void): void {
    this.handlers.push(handler);
  }

  close(): void {
    this.socket.close();
  }
}

/** In-memory loopback for unit tests. */
export class LoopbackTransport implements Transport {
  private handlers: ((line: string) => void)[] = [];
  sent: string[] = [];

  constructor(private respond: (line: string) => string | null) {}

  send(line: string): void {
    this.sent.push(line);
    const reply = this.respond(line);
    if (reply !== null) {
      queueMicrotask(() => {
        for (const handler of this.handlers) {
          handler(reply);
        }
      });
    }
  }

  onMessage(handler: (line: string) => void): void {
    this.handlers.push(handler);
  }

  close(): void {}
}
