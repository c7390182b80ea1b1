"""Wire messages and their fixed-layout little-endian binary codec.

Every frame starts with a 6-byte header: magic "ETOP", version 0x01, then a
one-byte type tag. Payloads are fixed-layout little-endian; the only
variable-length section is the event list at the tail of a slave state
message (u16 count, then one (kind u8, target i8) pair per event).

Frame types:
    0x01 MasterCommand   tick u64, seq u64, mode u8, endoscope velocity 4xf64,
                         two instrument targets (bend1, bend2, trans,
                         roll_rate, grip as 5xf64 + has_grip u8), cautery u8
    0x02 SlaveStateMsg   tick u64, endoscope snapshot 10xf64, two arm
                         snapshots (kind u8 + 5xf64 + has_grip u8), three tip
                         poses 7xf64 (position + wxyz quaternion), events
    0x03 AxesRecord      19xf64 normalized master axes (UI bridge only)

decode(encode(m)) == m bit-exactly for any finite message.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .config import ControlMode
from .errors import CodecError
from .geometry import TipPose
from .slave import BacklashModel, EndoscopeState, InstrumentArmState, InstrumentKind, InstrumentTarget
from .world import Event, EventKind

MAGIC = b"ETOP"
VERSION = 0x01
TYPE_MASTER_COMMAND = 0x01
TYPE_SLAVE_STATE = 0x02
TYPE_AXES_RECORD = 0x03

_HEADER = struct.Struct("<4sBB")
_MC_PAYLOAD = struct.Struct("<QQB4d5dB5dBB")
_SS_FIXED = struct.Struct("<Q10dB5dBB5dB21dH")
_EVENT = struct.Struct("<Bb")
_AXES = struct.Struct("<19d")

_MODE_CODE = {ControlMode.THREE_LIMB: 0, ControlMode.HAND_CLUTCH: 1}
_MODE_FROM_CODE = {v: k for k, v in _MODE_CODE.items()}
_KIND_CODE = {InstrumentKind.GRASPER: 0, InstrumentKind.HOOK: 1}
_KIND_FROM_CODE = {v: k for k, v in _KIND_CODE.items()}


@dataclass(frozen=True)
class MasterCommand:
    tick: int
    seq: int
    mode: ControlMode
    endo_vel: tuple[float, float, float, float]
    left_target: InstrumentTarget
    right_target: InstrumentTarget
    cautery: bool


@dataclass(frozen=True)
class SlaveStateMsg:
    tick: int
    endoscope: EndoscopeState
    arms: tuple[InstrumentArmState, InstrumentArmState]
    tip_poses: tuple[TipPose, TipPose, TipPose]
    events: tuple[Event, ...]


def _target_fields(t: InstrumentTarget) -> tuple:
    has_grip = t.grip is not None
    return (t.bend1_deg, t.bend2_deg, t.trans_mm, t.roll_rate_dps,
            t.grip if has_grip else 0.0, 1 if has_grip else 0)


def _target_from_fields(b1, b2, tr, rr, grip, has_grip) -> InstrumentTarget:
    return InstrumentTarget(b1, b2, tr, rr, grip if has_grip else None)


def encode(msg: MasterCommand | SlaveStateMsg) -> bytes:
    if isinstance(msg, MasterCommand):
        return _HEADER.pack(MAGIC, VERSION, TYPE_MASTER_COMMAND) + _MC_PAYLOAD.pack(
            msg.tick, msg.seq, _MODE_CODE[msg.mode],
            *msg.endo_vel,
            *_target_fields(msg.left_target),
            *_target_fields(msg.right_target),
            1 if msg.cautery else 0,
        )
    if isinstance(msg, SlaveStateMsg):
        e = msg.endoscope
        arm_fields = []
        for arm in msg.arms:
            has_grip = arm.grip is not None
            arm_fields += [
                _KIND_CODE[arm.kind], arm.bend1_deg, arm.bend2_deg, arm.trans_mm,
                arm.roll_deg, arm.grip if has_grip else 0.0, 1 if has_grip else 0,
            ]
        pose_fields = []
        for p in msg.tip_poses:
            pose_fields += [*p.position, *p.orientation]
        body = _SS_FIXED.pack(
            msg.tick,
            e.ud_motor_deg, e.lr_motor_deg, e.theta_e_deg, e.phi_e_deg,
            e.y_e_mm, e.gamma_e_deg,
            e.backlash_ud.play_state_deg, e.backlash_lr.play_state_deg,
            e.backlash_ud.half_width_deg, e.backlash_lr.half_width_deg,
            *arm_fields, *pose_fields, len(msg.events),
        )
        for ev in msg.events:
            body += _EVENT.pack(int(ev.kind), ev.target)
        return _HEADER.pack(MAGIC, VERSION, TYPE_SLAVE_STATE) + body
    raise TypeError(f"cannot encode {type(msg).__name__}")


def _check_header(data: bytes) -> int:
    """Validate the frame header, returning the type tag."""
    if len(data) < _HEADER.size:
        raise CodecError("truncated header", len(data))
    magic, version, tag = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CodecError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise CodecError(f"unsupported version {version}", 4)
    return tag


def decode(data: bytes) -> MasterCommand | SlaveStateMsg:
    tag = _check_header(data)
    off = _HEADER.size
    if tag == TYPE_MASTER_COMMAND:
        if len(data) != off + _MC_PAYLOAD.size:
            raise CodecError("master command payload size mismatch", len(data))
        f = _MC_PAYLOAD.unpack_from(data, off)
        mode = _MODE_FROM_CODE.get(f[2])
        if mode is None:
            raise CodecError(f"unknown control mode {f[2]}", off + 16)
        return MasterCommand(
            tick=f[0], seq=f[1], mode=mode,
            endo_vel=tuple(f[3:7]),
            left_target=_target_from_fields(*f[7:13]),
            right_target=_target_from_fields(*f[13:19]),
            cautery=bool(f[19]),
        )
    if tag == TYPE_SLAVE_STATE:
        if len(data) < off + _SS_FIXED.size:
            raise CodecError("truncated slave state payload", len(data))
        f = _SS_FIXED.unpack_from(data, off)
        endoscope = EndoscopeState(
            ud_motor_deg=f[1], lr_motor_deg=f[2], theta_e_deg=f[3], phi_e_deg=f[4],
            y_e_mm=f[5], gamma_e_deg=f[6],
            backlash_ud=BacklashModel(half_width_deg=f[9], play_state_deg=f[7]),
            backlash_lr=BacklashModel(half_width_deg=f[10], play_state_deg=f[8]),
        )
        arms = []
        for base in (11, 18):
            kind = _KIND_FROM_CODE.get(f[base])
            if kind is None:
                raise CodecError(f"unknown instrument kind {f[base]}", off)
            has_grip = bool(f[base + 6])
            arms.append(InstrumentArmState(
                kind=kind, bend1_deg=f[base + 1], bend2_deg=f[base + 2],
                trans_mm=f[base + 3], roll_deg=f[base + 4],
                grip=f[base + 5] if has_grip else None,
            ))
        poses = []
        for base in (25, 32, 39):
            poses.append(TipPose(tuple(f[base:base + 3]), tuple(f[base + 3:base + 7])))
        n_events = f[46]
        ev_off = off + _SS_FIXED.size
        if len(data) != ev_off + n_events * _EVENT.size:
            raise CodecError("slave state event section size mismatch", len(data))
        events = []
        for i in range(n_events):
            kind_code, target = _EVENT.unpack_from(data, ev_off + i * _EVENT.size)
            try:
                kind = EventKind(kind_code)
            except ValueError:
                raise CodecError(f"unknown event kind {kind_code}",
                                 ev_off + i * _EVENT.size) from None
            events.append(Event(kind, target))
        return SlaveStateMsg(f[0], endoscope, tuple(arms), tuple(poses), tuple(events))
    raise CodecError(f"unknown frame type 0x{tag:02x}", 5)


def encode_axes(axes) -> bytes:
    if len(axes) != 19:
        raise ValueError("axes record must have 19 elements")
    return _HEADER.pack(MAGIC, VERSION, TYPE_AXES_RECORD) + _AXES.pack(*axes)


def decode_axes(data: bytes) -> tuple[float, ...]:
    tag = _check_header(data)
    if tag != TYPE_AXES_RECORD:
        raise CodecError(f"expected axes record, got type 0x{tag:02x}", 5)
    if len(data) != _HEADER.size + _AXES.size:
        raise CodecError("axes record size mismatch", len(data))
    return _AXES.unpack_from(data, _HEADER.size)
