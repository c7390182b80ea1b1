// Browser entry: connect to the bridge, pump input each render frame, draw
// the latest delivered slave state. The console is stateless with respect to
// simulation truth; reconnecting resumes from the next state message.

import { InputCapture, PadState } from "./input.js";
import { Hello, parsePayload, ProtocolError, encodeAxes } from "./protocol.js";
import { WebSocketTransport } from "./transport.js";
import { buildDisplayList, Primitive, ViewState } from "./view.js";

function draw(ctx: CanvasRenderingContext2D, prims: Primitive[], w: number, h: number) {
  ctx.fillStyle = "#111418";
  ctx.fillRect(0, 0, w, h);
  for (const p of prims) {
    switch (p.type) {
      case "poly": {
        ctx.strokeStyle = p.color;
        ctx.beginPath();
        p.pts.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
        if (p.closed) ctx.closePath();
        ctx.stroke();
        break;
      }
      case "disk": {
        ctx.fillStyle = p.color;
        ctx.beginPath();
        ctx.arc(p.x, p.y, p.r, 0, 2 * Math.PI);
        ctx.fill();
        if (p.ring) {
          ctx.strokeStyle = "#d4b483";
          ctx.lineWidth = 3;
          ctx.beginPath();
          ctx.arc(p.x, p.y, p.r + 4, 0, 2 * Math.PI);
          ctx.stroke();
          ctx.lineWidth = 1;
        }
        break;
      }
      case "cross": {
        ctx.strokeStyle = p.color;
        ctx.beginPath();
        ctx.moveTo(p.x - p.size, p.y);
        ctx.lineTo(p.x + p.size, p.y);
        ctx.moveTo(p.x, p.y - p.size);
        ctx.lineTo(p.x, p.y + p.size);
        ctx.stroke();
        ctx.fillStyle = p.color;
        ctx.font = "10px monospace";
        ctx.fillText(p.label, p.x + p.size + 2, p.y);
        break;
      }
      case "text": {
        ctx.fillStyle = p.color;
        ctx.font = `${p.size ?? 13}px monospace`;
        ctx.fillText(p.text, p.x, p.y);
        break;
      }
    }
  }
}

function banner(text: string) {
  const el = document.getElementById("banner")!;
  el.textContent = text;
  el.style.display = text ? "block" : "none";
}

function currentPad(): PadState | null {
  for (const pad of navigator.getGamepads?.() ?? []) {
    if (pad) return pad;
  }
  return null;
}

export function start() {
  const canvas = document.getElementById("screen") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const params = new URLSearchParams(location.search);
  const port = params.get("port") ?? "7349";
  const url = `ws://${location.hostname || "127.0.0.1"}:${port}`;

  const input = new InputCapture();
  let view: ViewState | null = null;
  let transport: WebSocketTransport;
  try {
    transport = new WebSocketTransport(url);
  } catch (err) {
    banner(`cannot open ${url}: ${err}`);
    return;
  }

  transport.onClose((reason) => banner(`bridge unavailable: ${reason}`));
  transport.onFrame((payload) => {
    let msg;
    try {
      msg = parsePayload(payload);
    } catch (err) {
      if (err instanceof ProtocolError) {
        banner(err.message);
        transport.close();
      }
      return;
    }
    if (msg.kind === "hello") {
      view = new ViewState(msg as Hello);
      banner("");
    } else if (view) {
      view.update(msg);
    }
  });

  window.addEventListener("keydown", (ev) => {
    if (ev.code === "KeyV") {
      if (view) view.topCamera = !view.topCamera;
      return;
    }
    input.keyDown(ev.code);
  });
  window.addEventListener("keyup", (ev) => input.keyUp(ev.code));

  const loop = () => {
    // Exactly one axes record per render frame.
    const axes = input.frame(currentPad());
    transport.sendFrame(encodeAxes(axes));
    if (view) {
      view.lastAxes = axes;
      draw(ctx, buildDisplayList(view, canvas.width, canvas.height), canvas.width, canvas.height);
    }
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);
}

start();
