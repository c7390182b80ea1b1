// View model: accumulates slave state into renderable scene state and builds
// a backend-agnostic display list (drawn onto a canvas by main.ts, inspected
// directly by tests).

import {
  EventKind,
  Hello,
  SceneConfig,
  SlaveState,
  TipPose,
} from "./protocol.js";

export type Vec3 = [number, number, number];

export interface PlaneFrame {
  origin: Vec3;
  u: Vec3;
  v: Vec3;
  n: Vec3;
  halfU: number;
  halfV: number;
}

export function planeFromScene(scene: SceneConfig): PlaneFrame {
  const slope = (scene.plane.slope_deg * Math.PI) / 180;
  return {
    origin: scene.plane.origin as Vec3,
    u: [0, 1, 0],
    v: [Math.cos(slope), 0, Math.sin(slope)],
    n: [Math.sin(slope), 0, -Math.cos(slope)],
    halfU: scene.plane.size_mm[0] / 2,
    halfV: scene.plane.size_mm[1] / 2,
  };
}

export function targetCenter(plane: PlaneFrame, u: number, v: number): Vec3 {
  return [
    plane.origin[0] + u * plane.u[0] + v * plane.v[0],
    plane.origin[1] + u * plane.u[1] + v * plane.v[1],
    plane.origin[2] + u * plane.u[2] + v * plane.v[2],
  ];
}

function rotate(q: [number, number, number, number], v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  return [
    vx + w * tx + (y * tz - z * ty),
    vy + w * ty + (z * tx - x * tz),
    vz + w * tz + (x * ty - y * tx),
  ];
}

const sub = (a: Vec3, b: Vec3): Vec3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
const dot = (a: Vec3, b: Vec3) => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

export type TargetStatus = "pending" | "lifted" | "cut";

export class ViewState {
  scene: SceneConfig;
  plane: PlaneFrame;
  tickHz: number;
  mode: string;
  state: SlaveState | null = null;
  statuses: TargetStatus[];
  failures = 0;
  lastFailureTick = -1e9;
  motionStartTick: number | null = null;
  cutTicks: number[] = [];
  topCamera = false;
  lastAxes: number[] = new Array(19).fill(0);

  constructor(hello: Hello) {
    this.scene = hello.scene;
    this.plane = planeFromScene(hello.scene);
    this.tickHz = hello.tickHz;
    this.mode = hello.mode;
    // Resume from the bridge's view of the task on (re)connect.
    this.statuses = hello.scene.targets.map(
      (_, i) => (hello.targetStatuses[i] as TargetStatus) ?? "pending",
    );
  }

  /** Fold one freshly delivered state message into the view. */
  update(msg: SlaveState) {
    this.state = msg;
    for (const ev of msg.events) {
      switch (ev.kind) {
        case EventKind.TargetCut:
          this.statuses[ev.target] = "cut";
          this.cutTicks.push(msg.tick);
          break;
        case EventKind.TargetLifted:
          this.statuses[ev.target] = "lifted";
          break;
        case EventKind.TargetReleased:
          this.statuses[ev.target] = "pending";
          break;
        case EventKind.MissCut:
          this.failures += 1;
          this.lastFailureTick = msg.tick;
          break;
        case EventKind.EndoMotionStart:
          if (this.motionStartTick === null) this.motionStartTick = msg.tick;
          break;
      }
    }
  }

  completed(): boolean {
    return this.statuses.length > 0 && this.statuses.every((s) => s === "cut");
  }

  completionTimeS(): number | null {
    if (!this.completed() || this.motionStartTick === null || this.cutTicks.length < 4) {
      return null;
    }
    return (this.cutTicks[3] - this.motionStartTick) / this.tickHz;
  }

  /** Restoring-force readout per hand axis (N), from the last sent record. */
  hapticReadout(): { left: number[]; right: number[] } {
    const f = (i: number) => -2 * Math.max(-1, Math.min(1, this.lastAxes[i]));
    return { left: [f(4), f(5), f(6), f(7)], right: [f(11), f(12), f(13), f(14)] };
  }
}

export type Primitive =
  | { type: "poly"; pts: [number, number][]; color: string; closed: boolean }
  | { type: "disk"; x: number; y: number; r: number; color: string; ring: boolean; label: string }
  | { type: "cross"; x: number; y: number; size: number; color: string; label: string }
  | { type: "text"; x: number; y: number; text: string; color: string; size?: number };

const STATUS_COLOR: Record<TargetStatus, string> = {
  pending: "#3b82f6",
  lifted: "#f59e0b",
  cut: "#22c55e",
};

export const ENDOSCOPE_FOV_DEG = 120;

export interface Camera {
  project(p: Vec3): [number, number] | null;
}

export function endoscopeCamera(pose: TipPose, width: number, height: number): Camera {
  const cam = pose.position as Vec3;
  const fwd = rotate(pose.orientation, [0, 0, 1]);
  const up = rotate(pose.orientation, [1, 0, 0]);
  const right = rotate(pose.orientation, [0, 1, 0]);
  const f = width / 2 / Math.tan(((ENDOSCOPE_FOV_DEG / 2) * Math.PI) / 180);
  return {
    project(p: Vec3) {
      const d = sub(p, cam);
      const depth = dot(d, fwd);
      if (depth < 1e-6) return null;
      return [
        width / 2 + (dot(d, right) / depth) * f,
        height / 2 - (dot(d, up) / depth) * f,
      ];
    },
  };
}

export function topCamera(width: number, height: number, scale = 2.2): Camera {
  // Plan view looking down the world x axis: screen x <- world y (mirrored so
  // "operator right" is screen right), screen y <- world z.
  return {
    project(p: Vec3) {
      return [width / 2 - p[1] * scale, height - 30 - (p[2] - 120) * scale];
    },
  };
}

export function buildDisplayList(view: ViewState, width: number, height: number): Primitive[] {
  const prims: Primitive[] = [];
  if (!view.state) {
    prims.push({ type: "text", x: 16, y: 24, text: "waiting for slave state...", color: "#eee" });
    return prims;
  }
  const cam = view.topCamera
    ? topCamera(width, height)
    : endoscopeCamera(view.state.tipPoses[0], width, height);

  const plane = view.plane;
  const corners: Vec3[] = [
    targetCenter(plane, -plane.halfU, -plane.halfV),
    targetCenter(plane, plane.halfU, -plane.halfV),
    targetCenter(plane, plane.halfU, plane.halfV),
    targetCenter(plane, -plane.halfU, plane.halfV),
  ];
  const outline = corners.map((c) => cam.project(c));
  if (outline.every((p) => p !== null)) {
    prims.push({
      type: "poly",
      pts: outline as [number, number][],
      color: "#6b5540",
      closed: true,
    });
  }

  view.scene.targets.forEach((t, i) => {
    const center = targetCenter(plane, t.u, t.v);
    const p = cam.project(center);
    if (!p) return;
    const edge = cam.project(targetCenter(plane, t.u + (t.kind === "exposed" ? 4 : 7.5), t.v));
    const r = edge ? Math.max(3, Math.hypot(edge[0] - p[0], edge[1] - p[1])) : 6;
    prims.push({
      type: "disk",
      x: p[0],
      y: p[1],
      r,
      color: STATUS_COLOR[view.statuses[i]],
      // Covered targets carry a cover ring until lifted or cut.
      ring: t.kind === "covered" && view.statuses[i] === "pending",
      label: `${i}`,
    });
  });

  const tips = view.state.tipPoses;
  const labels = ["scope", "grasper", "hook"];
  const colors = ["#e2e8f0", "#38bdf8", "#f87171"];
  for (let i = 1; i < 3; i++) {
    const p = cam.project(tips[i].position as Vec3);
    if (p) {
      prims.push({ type: "cross", x: p[0], y: p[1], size: 7, color: colors[i], label: labels[i] });
    }
  }

  const e = view.state.endoscope;
  const hud = [
    `mode ${view.mode}  tick ${view.state.tick}  cam ${view.topCamera ? "top" : "endoscope"}`,
    `scope  ud ${e.thetaDeg.toFixed(1)}  lr ${e.phiDeg.toFixed(1)}  ` +
      `ins ${e.insertionMm.toFixed(1)}mm  roll ${e.rollDeg.toFixed(1)}`,
    `targets ${view.statuses.join(" ")}  failures ${view.failures}`,
  ];
  const haptic = view.hapticReadout();
  hud.push(
    `force L [${haptic.left.map((v) => v.toFixed(1)).join(" ")}] N  ` +
      `R [${haptic.right.map((v) => v.toFixed(1)).join(" ")}] N`,
  );
  hud.forEach((line, i) => {
    prims.push({ type: "text", x: 12, y: 20 + 16 * i, text: line, color: "#e5e7eb" });
  });

  if (view.state.tick - view.lastFailureTick < 40) {
    prims.push({ type: "text", x: width / 2 - 40, y: 52, text: "MISS", color: "#ef4444", size: 28 });
  }
  if (view.completed()) {
    const t = view.completionTimeS();
    prims.push({
      type: "text",
      x: width / 2 - 120,
      y: height / 2,
      text: `ALL TARGETS CUT${t !== null ? ` in ${t.toFixed(2)} s` : ""}`,
      color: "#22c55e",
      size: 24,
    });
  }
  return prims;
}
