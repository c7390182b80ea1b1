"""Deterministic fixed-tick session binding masters, channels, slave and task.

One tick: map the axes record through the master side, send the command,
deliver due commands (the slave holds the last delivered command across
gaps and drops), integrate the slave model, step the task world, and send
the slave state back. The session is the sole owner of mutable state; the
only randomness lives inside the two channels' seeded generators, so a
session is a pure function of (config, scene, axes trace).
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from . import masters, world as task
from .channel import Channel
from .config import ControlMode, Hand, SimConfig
from .geometry import TipPose
from .slave import (
    InstrumentArmState,
    InstrumentKind,
    endoscope_fk,
    initial_arm_state,
    initial_endoscope_state,
    instrument_fk,
    step_endoscope,
    step_instrument,
)
from .wire import MasterCommand, SlaveStateMsg, decode, encode

ZERO_AXES = tuple(0.0 for _ in range(masters.AXES_LEN))


@dataclass(frozen=True)
class TickRecord:
    tick: int
    axes: tuple[float, ...]
    held_seq: int
    digest: str
    events: tuple[task.Event, ...]


class Session:
    def __init__(self, config: SimConfig, scene_cfg: dict, record: bool = True):
        config.rates.validate()
        config.channel.validate()
        self.config = config
        self.scene_cfg = scene_cfg
        self.scene = task.load_scene(scene_cfg)
        self.world = task.new_world(self.scene)
        self.master = masters.initial_master_state(
            config.mode, config.rates, config.grasper, config.hook, config.clutch_hand
        )
        self.endoscope = initial_endoscope_state(config.endoscope)
        self.left_arm = initial_arm_state(InstrumentKind.GRASPER)
        self.right_arm = initial_arm_state(InstrumentKind.HOOK)
        self.m2s = Channel(config.channel)
        self.s2m = Channel(config.channel)
        self.held_cmd: MasterCommand | None = None
        self.tick = 0
        self.first_motion_tick: int | None = None
        self.records: list[TickRecord] | None = [] if record else None
        self.scope_tip = endoscope_fk(self.endoscope, config.endoscope.bend_len_mm)
        self.grasper_tip = self._arm_tip(self.left_arm, config.grasper)
        self.hook_tip = self._arm_tip(self.right_arm, config.hook)

    def _arm_tip(self, arm: InstrumentArmState, params) -> TipPose:
        base = self.scope_tip.compose(params.channel_offset, (1.0, 0.0, 0.0, 0.0))
        return instrument_fk(arm, base, params)

    def tick_once(self, axes) -> SlaveStateMsg | None:
        """Advance one tick; returns the slave state message delivered back to
        the master side this tick, if any. Rejects non-finite axes without
        touching any state."""
        cfg = self.config
        # Raises InvalidInput before any state is touched.
        foot, left, right, cautery = masters.poses_from_axes(axes, cfg.rates)
        axes = tuple(float(a) for a in axes)

        self.master, cmd = masters.compose_master_command(
            self.master, foot, left, right, cautery, self.tick
        )
        self.m2s.send(encode(cmd), self.tick)

        delivered = self.m2s.poll(self.tick)
        if delivered:
            self.held_cmd = decode(delivered[-1])
        eff = self.held_cmd

        dt = cfg.dt
        endo_moved = False
        if eff is not None:
            self.endoscope = step_endoscope(self.endoscope, eff.endo_vel, dt, cfg.endoscope)
            endo_moved = any(v != 0.0 for v in eff.endo_vel)
            self.left_arm = step_instrument(self.left_arm, eff.left_target, cfg.grasper, dt)
            self.right_arm = step_instrument(self.right_arm, eff.right_target, cfg.hook, dt)

        self.scope_tip = endoscope_fk(self.endoscope, cfg.endoscope.bend_len_mm)
        self.grasper_tip = self._arm_tip(self.left_arm, cfg.grasper)
        self.hook_tip = self._arm_tip(self.right_arm, cfg.hook)

        # Cuts are evaluated before grasp updates so a cover lifted this very
        # tick can only be cut on a later tick.
        events: list[task.Event] = []
        cautery_on = eff.cautery if eff is not None else False
        self.world, cut_events = task.cut_step(
            self.world, self.hook_tip, cautery_on, self.tick, cfg.world
        )
        events.extend(cut_events)
        grip = self.left_arm.grip if self.left_arm.grip is not None else 0.0
        self.world, grasp_events = task.grasp_step(self.world, self.grasper_tip, grip, cfg.world)
        events.extend(grasp_events)

        if endo_moved and self.first_motion_tick is None:
            self.first_motion_tick = self.tick
            events.append(task.Event(task.EventKind.ENDO_MOTION_START))

        msg = SlaveStateMsg(
            tick=self.tick,
            endoscope=self.endoscope,
            arms=(self.left_arm, self.right_arm),
            tip_poses=(self.scope_tip, self.grasper_tip, self.hook_tip),
            events=tuple(events),
        )
        self.s2m.send(encode(msg), self.tick)
        back = self.s2m.poll(self.tick)

        executed = self.tick
        self.tick += 1
        if self.records is not None:
            self.records.append(TickRecord(
                tick=executed,
                axes=axes,
                held_seq=self.held_cmd.seq if self.held_cmd is not None else -1,
                digest=self.state_hash(),
                events=tuple(events),
            ))
        return decode(back[-1]) if back else None

    def _canonical_bytes(self) -> bytes:
        ms = self.master
        cl = ms.clutch
        e = self.endoscope
        parts = [struct.pack(
            "<qqq", self.tick, ms.seq,
            -1 if self.first_motion_tick is None else self.first_motion_tick,
        )]
        parts.append(struct.pack(
            "<BBBBBB",
            0 if ms.mode is ControlMode.THREE_LIMB else 1,
            0 if cl.endoscope_hand is Hand.LEFT else 1,
            0 if cl.left_target is masters.ControlTarget.ENDOSCOPE else 1,
            0 if cl.right_target is masters.ControlTarget.ENDOSCOPE else 1,
            int(cl.prev_upper), int(cl.prev_lower),
        ))
        a = cl.rebase_anchor
        parts.append(struct.pack("<5d", a.x_h, a.y_h, a.z_h, a.gamma_h, a.grip))
        for t in (ms.frozen_tool_target, ms.tool_base_target):
            parts.append(struct.pack(
                "<5d", t.bend1_deg, t.bend2_deg, t.trans_mm, t.roll_rate_dps,
                t.grip if t.grip is not None else -1.0,
            ))
        parts.append(struct.pack(
            "<10d", e.ud_motor_deg, e.lr_motor_deg, e.theta_e_deg, e.phi_e_deg,
            e.y_e_mm, e.gamma_e_deg,
            e.backlash_ud.play_state_deg, e.backlash_lr.play_state_deg,
            e.backlash_ud.half_width_deg, e.backlash_lr.half_width_deg,
        ))
        for arm in (self.left_arm, self.right_arm):
            parts.append(struct.pack(
                "<5d", arm.bend1_deg, arm.bend2_deg, arm.trans_mm, arm.roll_deg,
                arm.grip if arm.grip is not None else -1.0,
            ))
        parts.append(encode(self.held_cmd) if self.held_cmd is not None else b"\x00")
        parts.append(self.m2s.fingerprint())
        parts.append(self.s2m.fingerprint())
        w = self.world
        for t in w.targets:
            parts.append(struct.pack(
                "<Bq",
                {task.TargetStatus.PENDING: 0, task.TargetStatus.LIFTED: 1,
                 task.TargetStatus.CUT: 2}[t.status],
                -1 if t.cut_tick is None else t.cut_tick,
            ))
        g = w.grasp
        ap = g.attach_point if g.attach_point is not None else (0.0, 0.0, 0.0)
        parts.append(struct.pack(
            "<qd3dBdq",
            -1 if g.held_target is None else g.held_target, g.lift_mm, *ap,
            int(w.burn_active), w.prev_grip, len(w.miss_ticks),
        ))
        return b"".join(parts)

    def state_hash(self) -> str:
        """16-hex-char digest of the full session state, stable across runs."""
        return hashlib.blake2b(self._canonical_bytes(), digest_size=8).hexdigest()

    def trial_result(self) -> task.TrialResult:
        return task.trial_status(self.world, self.config.tick_hz, self.first_motion_tick)
