// Transport abstraction over the framed byte stream. The browser speaks
// WebSocket (each binary message carries one complete frame); tests drive the
// same protocol stack over raw TCP.

import { frame, FrameSplitter } from "./protocol.js";

export interface FrameTransport {
  sendFrame(payload: Uint8Array): void;
  onFrame(cb: (payload: Uint8Array) => void): void;
  onClose(cb: (reason: string) => void): void;
  close(): void;
}

export class WebSocketTransport implements FrameTransport {
  private ws: WebSocket;
  private splitter = new FrameSplitter();
  private frameCb: ((payload: Uint8Array) => void) | null = null;
  private closeCb: ((reason: string) => void) | null = null;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.binaryType = "arraybuffer";
    this.ws.onmessage = (ev) => {
      if (!(ev.data instanceof ArrayBuffer)) return;
      for (const payload of this.splitter.push(new Uint8Array(ev.data))) {
        this.frameCb?.(payload);
      }
    };
    this.ws.onerror = () => this.closeCb?.("connection error");
    this.ws.onclose = () => this.closeCb?.("connection closed");
  }

  sendFrame(payload: Uint8Array) {
    if (this.ws.readyState === WebSocket.OPEN) this.ws.send(frame(payload));
  }

  onFrame(cb: (payload: Uint8Array) => void) {
    this.frameCb = cb;
  }

  onClose(cb: (reason: string) => void) {
    this.closeCb = cb;
  }

  close() {
    this.ws.close();
  }
}
