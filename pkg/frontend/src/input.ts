// Keyboard and gamepad capture into the simulator's 19-element axes record:
// [foot pitch, foot yaw, foot lateral, foot fore/aft,
//  Lx, Ly, Lz, Lroll, Lgrip, LbtnUp, LbtnDown,
//  Rx, Ry, Rz, Rroll, Rgrip, RbtnUp, RbtnDown, cautery]

import { AXES_LEN } from "./protocol.js";

export const SLOT = {
  footPitch: 0, footYaw: 1, footLateral: 2, footForeAft: 3,
  lx: 4, ly: 5, lz: 6, lroll: 7, lgrip: 8, lbtnUp: 9, lbtnDown: 10,
  rx: 11, ry: 12, rz: 13, rroll: 14, rgrip: 15, rbtnUp: 16, rbtnDown: 17,
  cautery: 18,
} as const;

// The clutch buttons are edge-semantic: one frame per press. Everything else
// is level (held key = held deflection).
const EDGE_SLOTS = new Set<number>([SLOT.lbtnUp, SLOT.lbtnDown, SLOT.rbtnUp, SLOT.rbtnDown]);

export interface KeyBinding {
  code: string;
  slot: number;
  value: number;
}

export interface PadAxisBinding {
  axis: number;
  slot: number;
  scale?: number;
}

export interface PadButtonBinding {
  button: number;
  slot: number;
}

export interface InputBinding {
  keys: KeyBinding[];
  padAxes: PadAxisBinding[];
  padButtons: PadButtonBinding[];
}

// Keyboard fallback so the console works without a gamepad.
export const DEFAULT_BINDING: InputBinding = {
  keys: [
    { code: "KeyW", slot: SLOT.footPitch, value: 1 },
    { code: "KeyS", slot: SLOT.footPitch, value: -1 },
    { code: "KeyA", slot: SLOT.footYaw, value: -1 },
    { code: "KeyD", slot: SLOT.footYaw, value: 1 },
    { code: "KeyR", slot: SLOT.footForeAft, value: 1 },
    { code: "KeyF", slot: SLOT.footForeAft, value: -1 },
    { code: "KeyQ", slot: SLOT.footLateral, value: -1 },
    { code: "KeyE", slot: SLOT.footLateral, value: 1 },
    { code: "KeyT", slot: SLOT.lx, value: 1 },
    { code: "KeyG", slot: SLOT.lx, value: -1 },
    { code: "KeyY", slot: SLOT.ly, value: 1 },
    { code: "KeyH", slot: SLOT.ly, value: -1 },
    { code: "KeyU", slot: SLOT.lz, value: 1 },
    { code: "KeyJ", slot: SLOT.lz, value: -1 },
    { code: "KeyI", slot: SLOT.lroll, value: 1 },
    { code: "KeyK", slot: SLOT.lroll, value: -1 },
    { code: "Space", slot: SLOT.lgrip, value: 1 },
    { code: "KeyZ", slot: SLOT.lbtnUp, value: 1 },
    { code: "KeyX", slot: SLOT.lbtnDown, value: 1 },
    { code: "ArrowRight", slot: SLOT.rx, value: 1 },
    { code: "ArrowLeft", slot: SLOT.rx, value: -1 },
    { code: "ArrowUp", slot: SLOT.ry, value: 1 },
    { code: "ArrowDown", slot: SLOT.ry, value: -1 },
    { code: "PageUp", slot: SLOT.rz, value: 1 },
    { code: "PageDown", slot: SLOT.rz, value: -1 },
    { code: "Home", slot: SLOT.rroll, value: 1 },
    { code: "End", slot: SLOT.rroll, value: -1 },
    { code: "Enter", slot: SLOT.rgrip, value: 1 },
    { code: "KeyN", slot: SLOT.rbtnUp, value: 1 },
    { code: "KeyM", slot: SLOT.rbtnDown, value: 1 },
    { code: "KeyC", slot: SLOT.cautery, value: 1 },
  ],
  padAxes: [
    { axis: 0, slot: SLOT.footYaw },
    { axis: 1, slot: SLOT.footPitch, scale: -1 },
    { axis: 2, slot: SLOT.footLateral },
    { axis: 3, slot: SLOT.footForeAft, scale: -1 },
  ],
  padButtons: [
    { button: 0, slot: SLOT.cautery },
    { button: 4, slot: SLOT.rbtnUp },
    { button: 5, slot: SLOT.rbtnDown },
  ],
};

/** Minimal stand-in for the Gamepad API shape, synthesizable in tests. */
export interface PadState {
  axes: ReadonlyArray<number>;
  buttons: ReadonlyArray<{ pressed: boolean; value: number }>;
}

export function validateBinding(binding: InputBinding): void {
  const seen = new Map<number, number>();
  for (const b of [...binding.padAxes, ...binding.padButtons]) {
    seen.set(b.slot, (seen.get(b.slot) ?? 0) + 1);
    if (seen.get(b.slot)! > 1) throw new Error(`axis slot ${b.slot} bound more than once`);
  }
}

export class InputCapture {
  private held = new Set<string>();
  private prevEdgeValues = new Array<number>(AXES_LEN).fill(0);

  constructor(readonly binding: InputBinding = DEFAULT_BINDING) {
    validateBinding(binding);
  }

  keyDown(code: string) {
    this.held.add(code);
  }

  keyUp(code: string) {
    this.held.delete(code);
  }

  /** Build one axes record; call exactly once per render frame. */
  frame(pad: PadState | null = null): number[] {
    const raw = new Array<number>(AXES_LEN).fill(0);
    for (const k of this.binding.keys) {
      if (this.held.has(k.code)) raw[k.slot] += k.value;
    }
    if (pad) {
      for (const a of this.binding.padAxes) {
        const v = pad.axes[a.axis];
        if (v !== undefined) raw[a.slot] += v * (a.scale ?? 1);
      }
      for (const b of this.binding.padButtons) {
        const btn = pad.buttons[b.button];
        if (btn?.pressed) raw[b.slot] += btn.value || 1;
      }
    }
    const out = raw.map((v, slot) => {
      const clamped = Math.max(-1, Math.min(1, v));
      if (!EDGE_SLOTS.has(slot)) return clamped;
      // Edge slots emit on the rising frame only.
      const rising = clamped > 0.5 && this.prevEdgeValues[slot] <= 0.5;
      return rising ? 1 : 0;
    });
    for (const slot of EDGE_SLOTS) {
      this.prevEdgeValues[slot] = Math.max(-1, Math.min(1, raw[slot]));
    }
    return out;
  }
}
