// Raw TCP transport over the same framing; node-only, used by the test
// harness (browsers use the WebSocket transport instead).

import * as net from "node:net";

import { frame, FrameSplitter } from "./protocol.js";
import { FrameTransport } from "./transport.js";

export class TcpTransport implements FrameTransport {
  private splitter = new FrameSplitter();
  private frameCb: ((payload: Uint8Array) => void) | null = null;
  private closeCb: ((reason: string) => void) | null = null;

  private constructor(private sock: net.Socket) {
    sock.on("data", (chunk) => {
      for (const payload of this.splitter.push(new Uint8Array(chunk))) {
        this.frameCb?.(payload);
      }
    });
    sock.on("error", (err) => this.closeCb?.(String(err)));
    sock.on("close", () => this.closeCb?.("connection closed"));
  }

  static connect(host: string, port: number): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const sock = net.createConnection({ host, port }, () => resolve(new TcpTransport(sock)));
      sock.once("error", reject);
    });
  }

  sendFrame(payload: Uint8Array) {
    this.sock.write(frame(payload));
  }

  onFrame(cb: (payload: Uint8Array) => void) {
    this.frameCb = cb;
  }

  onClose(cb: (reason: string) => void) {
    this.closeCb = cb;
  }

  close() {
    this.sock.destroy();
  }
}
