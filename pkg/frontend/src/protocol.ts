// Wire protocol mirror: [u32 length][payload] frames where each payload is a
// little-endian fixed-layout message starting with "ETOP", version, type tag.

export const PROTOCOL_VERSION = 0x01;
export const TYPE_HELLO = 0x00;
export const TYPE_MASTER_COMMAND = 0x01;
export const TYPE_SLAVE_STATE = 0x02;
export const TYPE_AXES_RECORD = 0x03;

const MAGIC = [0x45, 0x54, 0x4f, 0x50]; // "ETOP"

export const AXES_LEN = 19;

export interface Hello {
  kind: "hello";
  tickHz: number;
  mode: string;
  scene: SceneConfig;
  configDigest: string;
  targetStatuses: string[];
}

export interface SceneConfig {
  name: string;
  plane: { origin: number[]; slope_deg: number; size_mm: number[] };
  targets: { u: number; v: number; kind: "exposed" | "covered" }[];
}

export interface ArmState {
  kind: "grasper" | "hook";
  bend1Deg: number;
  bend2Deg: number;
  transMm: number;
  rollDeg: number;
  grip: number | null;
}

export interface TipPose {
  position: [number, number, number];
  // w, x, y, z
  orientation: [number, number, number, number];
}

export enum EventKind {
  TargetCut = 1,
  MissCut = 2,
  CoveredBlocked = 3,
  TargetLifted = 4,
  TargetReleased = 5,
  EndoMotionStart = 6,
}

export interface SlaveState {
  kind: "state";
  tick: number;
  endoscope: {
    udMotorDeg: number;
    lrMotorDeg: number;
    thetaDeg: number;
    phiDeg: number;
    insertionMm: number;
    rollDeg: number;
  };
  arms: [ArmState, ArmState];
  // scope tip, grasper tip, hook tip
  tipPoses: [TipPose, TipPose, TipPose];
  events: { kind: EventKind; target: number }[];
}

export class ProtocolError extends Error {
  constructor(message: string, readonly offset: number) {
    super(`${message} (at byte offset ${offset})`);
  }
}

/** Splits a byte stream into [u32 length][payload] frames. */
export class FrameSplitter {
  private buf = new Uint8Array(0);

  push(chunk: Uint8Array): Uint8Array[] {
    const merged = new Uint8Array(this.buf.length + chunk.length);
    merged.set(this.buf);
    merged.set(chunk, this.buf.length);
    this.buf = merged;

    const frames: Uint8Array[] = [];
    for (;;) {
      if (this.buf.length < 4) break;
      const view = new DataView(this.buf.buffer, this.buf.byteOffset, 4);
      const len = view.getUint32(0, true);
      if (this.buf.length < 4 + len) break;
      frames.push(this.buf.slice(4, 4 + len));
      this.buf = this.buf.slice(4 + len);
    }
    return frames;
  }
}

export function frame(payload: Uint8Array): Uint8Array {
  const out = new Uint8Array(4 + payload.length);
  new DataView(out.buffer).setUint32(0, payload.length, true);
  out.set(payload, 4);
  return out;
}

function checkHeader(data: Uint8Array): number {
  if (data.length < 6) throw new ProtocolError("truncated header", data.length);
  for (let i = 0; i < 4; i++) {
    if (data[i] !== MAGIC[i]) throw new ProtocolError("bad magic", 0);
  }
  if (data[4] !== PROTOCOL_VERSION) {
    throw new ProtocolError(`unsupported protocol version ${data[4]}`, 4);
  }
  return data[5];
}

function readArm(view: DataView, off: number): ArmState {
  const kind = view.getUint8(off) === 0 ? "grasper" : "hook";
  const grip = view.getFloat64(off + 33, true);
  const hasGrip = view.getUint8(off + 41) === 1;
  return {
    kind,
    bend1Deg: view.getFloat64(off + 1, true),
    bend2Deg: view.getFloat64(off + 9, true),
    transMm: view.getFloat64(off + 17, true),
    rollDeg: view.getFloat64(off + 25, true),
    grip: hasGrip ? grip : null,
  };
}

function readPose(view: DataView, off: number): TipPose {
  const f = (i: number) => view.getFloat64(off + i * 8, true);
  return {
    position: [f(0), f(1), f(2)],
    orientation: [f(3), f(4), f(5), f(6)],
  };
}

export function parsePayload(data: Uint8Array): Hello | SlaveState {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const tag = checkHeader(data);

  if (tag === TYPE_HELLO) {
    if (data.length < 10) throw new ProtocolError("truncated hello", data.length);
    const len = view.getUint32(6, true);
    if (data.length < 10 + len) throw new ProtocolError("truncated hello body", data.length);
    const info = JSON.parse(new TextDecoder().decode(data.slice(10, 10 + len)));
    return {
      kind: "hello",
      tickHz: info.tick_hz,
      mode: info.mode,
      scene: info.scene,
      configDigest: info.config_digest,
      targetStatuses: info.target_statuses ?? [],
    };
  }

  if (tag === TYPE_SLAVE_STATE) {
    const fixedLen = 348;
    if (data.length < fixedLen) throw new ProtocolError("truncated state", data.length);
    const nEvents = view.getUint16(346, true);
    if (data.length !== fixedLen + 2 * nEvents) {
      throw new ProtocolError("state event section size mismatch", data.length);
    }
    const f = (i: number) => view.getFloat64(14 + i * 8, true);
    const events = [];
    for (let i = 0; i < nEvents; i++) {
      events.push({
        kind: view.getUint8(348 + 2 * i) as EventKind,
        target: view.getInt8(348 + 2 * i + 1),
      });
    }
    return {
      kind: "state",
      tick: Number(view.getBigUint64(6, true)),
      endoscope: {
        udMotorDeg: f(0),
        lrMotorDeg: f(1),
        thetaDeg: f(2),
        phiDeg: f(3),
        insertionMm: f(4),
        rollDeg: f(5),
      },
      arms: [readArm(view, 94), readArm(view, 136)],
      tipPoses: [readPose(view, 178), readPose(view, 234), readPose(view, 290)],
      events,
    };
  }
  throw new ProtocolError(`unexpected frame type 0x${tag.toString(16)}`, 5);
}

export function encodeAxes(axes: number[]): Uint8Array {
  if (axes.length !== AXES_LEN) throw new Error(`axes record must have ${AXES_LEN} elements`);
  const out = new Uint8Array(6 + AXES_LEN * 8);
  out.set(MAGIC, 0);
  out[4] = PROTOCOL_VERSION;
  out[5] = TYPE_AXES_RECORD;
  const view = new DataView(out.buffer);
  axes.forEach((a, i) => view.setFloat64(6 + i * 8, a, true));
  return out;
}
