"""Slave-side model: 4-DoF flexible endoscope and two channel-mounted arms.

The endoscope's two bending DoFs are driven through a cable pair whose slack
is modeled as a rate-independent play operator: the distal angle follows the
proximal motor only once the motor escapes a dead band of half-width w around
the current distal position. Insertion and axial roll are direct (decoupled)
drives. The bending section is a constant-curvature arc for kinematics.

All state types are immutable values; stepping returns a new state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .config import EndoscopeParams, InstrumentParams
from .errors import DegenerateMarkers, InvalidCommand
from .geometry import TipPose, arc_transform, quat_about_z


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


@dataclass(frozen=True)
class BacklashModel:
    """Play (backlash) operator state for one cable pair.

    half_width_deg is the dead-band half-width w; play_state_deg is the
    operator output, which always stays within w of the driving input.
    """

    half_width_deg: float
    play_state_deg: float = 0.0

    def __post_init__(self):
        if self.half_width_deg < 0:
            raise ValueError("backlash half-width must be >= 0")


def apply_backlash(model: BacklashModel, input_deg: float) -> tuple[BacklashModel, float]:
    """Advance the play operator by one input sample.

    output = clamp(previous state, input - w, input + w); with w = 0 this is
    the identity. Rate-independent: only the sample sequence matters.
    """
    w = model.half_width_deg
    out = _clamp(model.play_state_deg, input_deg - w, input_deg + w)
    return replace(model, play_state_deg=out), out


@dataclass(frozen=True)
class EndoscopeState:
    """Proximal motor angles plus the distal pose of the scope."""

    ud_motor_deg: float = 0.0
    lr_motor_deg: float = 0.0
    theta_e_deg: float = 0.0
    phi_e_deg: float = 0.0
    y_e_mm: float = 0.0
    gamma_e_deg: float = 0.0
    backlash_ud: BacklashModel = BacklashModel(0.0)
    backlash_lr: BacklashModel = BacklashModel(0.0)


def initial_endoscope_state(params: EndoscopeParams) -> EndoscopeState:
    w = params.backlash_half_width_deg
    return EndoscopeState(backlash_ud=BacklashModel(w), backlash_lr=BacklashModel(w))


def step_endoscope(
    state: EndoscopeState,
    vel_cmd: tuple[float, float, float, float],
    dt: float,
    params: EndoscopeParams,
) -> EndoscopeState:
    """Integrate one tick of endoscope velocity command.

    vel_cmd = (up/down bend rate deg/s, left/right bend rate deg/s,
    insertion rate mm/s, roll rate deg/s). Bend rates drive the proximal
    motors, which reach the distal tip through the play operator; insertion
    clamps to the translation travel; roll wraps to [0, 360) and never
    touches insertion (the two drives are mechanically independent).
    """
    if dt <= 0:
        raise InvalidCommand("dt must be > 0")
    if not all(math.isfinite(v) for v in vel_cmd):
        raise InvalidCommand("non-finite velocity command")

    # Motors saturate where the distal joint limit becomes reachable through
    # the play operator; this keeps the distal angle within the bend limit
    # without a separate distal clamp.
    motor_limit = params.bend_limit_deg / params.motor_gain + params.backlash_half_width_deg
    ud = _clamp(state.ud_motor_deg + vel_cmd[0] * dt, -motor_limit, motor_limit)
    lr = _clamp(state.lr_motor_deg + vel_cmd[1] * dt, -motor_limit, motor_limit)
    bl_ud, play_ud = apply_backlash(state.backlash_ud, ud)
    bl_lr, play_lr = apply_backlash(state.backlash_lr, lr)

    y = state.y_e_mm
    if vel_cmd[2] != 0.0:
        y = _clamp(y + vel_cmd[2] * dt, 0.0, params.travel_mm)
    gamma = state.gamma_e_deg
    if vel_cmd[3] != 0.0:
        gamma = (gamma + vel_cmd[3] * dt) % 360.0

    # The motor clamp already confines the play output; the final clamp only
    # shaves sub-ulp rounding excess at the exact limit.
    lim = params.bend_limit_deg
    return EndoscopeState(
        ud_motor_deg=ud,
        lr_motor_deg=lr,
        theta_e_deg=_clamp(params.motor_gain * play_ud, -lim, lim),
        phi_e_deg=_clamp(params.motor_gain * play_lr, -lim, lim),
        y_e_mm=y,
        gamma_e_deg=gamma,
        backlash_ud=bl_ud,
        backlash_lr=bl_lr,
    )


def endoscope_fk(state: EndoscopeState, bend_len_mm: float) -> TipPose:
    """Tip pose of the scope in the world frame (insertion axis = +z).

    The bending section is a single constant-curvature arc of length L with
    total bend sqrt(theta^2 + phi^2) in the plane at azimuth atan2(phi,
    theta), the whole assembly rolled about +z by gamma and translated by
    the insertion depth. Pure up/down bend (theta > 0) curls toward +x,
    pure left/right (phi > 0) toward +y.
    """
    if bend_len_mm <= 0:
        raise ValueError("bend_len_mm must be > 0")
    theta = math.radians(state.theta_e_deg)
    phi = math.radians(state.phi_e_deg)
    beta = math.hypot(theta, phi)
    azim = math.atan2(phi, theta) if beta > 0.0 else 0.0
    gamma = math.radians(state.gamma_e_deg)

    base = TipPose((0.0, 0.0, state.y_e_mm), quat_about_z(gamma))
    offset, rot = arc_transform(beta, azim, bend_len_mm)
    return base.compose(offset, rot)


class InstrumentKind(Enum):
    GRASPER = "grasper"
    HOOK = "hook"


@dataclass(frozen=True)
class InstrumentArmState:
    """Joint vector of one instrument arm.

    bend1 is the proximal (up/down) bending segment, bend2 the distal
    (left/right) one. trans_mm is extension relative to the nominal
    protrusion, so it is never positive. grip is present only on the
    grasper.
    """

    kind: InstrumentKind
    bend1_deg: float = 0.0
    bend2_deg: float = 0.0
    trans_mm: float = 0.0
    roll_deg: float = 0.0
    grip: float | None = None

    def __post_init__(self):
        has_grip = self.grip is not None
        if has_grip != (self.kind is InstrumentKind.GRASPER):
            raise ValueError("grip must be present iff the arm is a grasper")


def initial_arm_state(kind: InstrumentKind) -> InstrumentArmState:
    grip = 0.0 if kind is InstrumentKind.GRASPER else None
    return InstrumentArmState(kind=kind, grip=grip)


@dataclass(frozen=True)
class InstrumentTarget:
    """Joint-space command for one arm: positions plus a roll rate.

    grip must be None for a hook and a closure fraction for a grasper;
    anything else is a layout mismatch.
    """

    bend1_deg: float = 0.0
    bend2_deg: float = 0.0
    trans_mm: float = 0.0
    roll_rate_dps: float = 0.0
    grip: float | None = None


def _toward(current: float, target: float, max_step: float) -> float:
    delta = target - current
    if delta > max_step:
        delta = max_step
    elif delta < -max_step:
        delta = -max_step
    return current + delta


def step_instrument(
    arm: InstrumentArmState,
    target: InstrumentTarget,
    params: InstrumentParams,
    dt: float,
) -> InstrumentArmState:
    """Move each joint toward its target at most one rate-limited step, then
    clamp to the joint range. Roll is rate-commanded and wraps to [0, 360)."""
    if dt <= 0:
        raise InvalidCommand("dt must be > 0")
    if (target.grip is not None) != (arm.kind is InstrumentKind.GRASPER):
        raise InvalidCommand(f"target grip layout does not match arm kind {arm.kind.value}")
    for v in (target.bend1_deg, target.bend2_deg, target.trans_mm, target.roll_rate_dps):
        if not math.isfinite(v):
            raise InvalidCommand("non-finite instrument target")

    lim = params.bend_limit_deg
    b1 = _clamp(_toward(arm.bend1_deg, target.bend1_deg, params.max_bend_rate_dps * dt), -lim, lim)
    b2 = _clamp(_toward(arm.bend2_deg, target.bend2_deg, params.max_bend_rate_dps * dt), -lim, lim)
    tr = _clamp(
        _toward(arm.trans_mm, target.trans_mm, params.max_trans_rate_mm_s * dt),
        params.trans_min_mm,
        params.trans_max_mm,
    )
    roll_rate = _clamp(target.roll_rate_dps, -params.max_roll_rate_dps, params.max_roll_rate_dps)
    roll = arm.roll_deg if roll_rate == 0.0 else (arm.roll_deg + roll_rate * dt) % 360.0

    grip = arm.grip
    if arm.kind is InstrumentKind.GRASPER:
        if not math.isfinite(target.grip):
            raise InvalidCommand("non-finite grip target")
        grip = _clamp(_toward(arm.grip, target.grip, params.max_grip_rate_per_s * dt), 0.0, 1.0)

    return replace(arm, bend1_deg=b1, bend2_deg=b2, trans_mm=tr, roll_deg=roll, grip=grip)


def instrument_fk(arm: InstrumentArmState, base: TipPose, params: InstrumentParams) -> TipPose:
    """Tool tip pose given the channel-exit pose it is mounted on.

    Chain: a straight feed section making up the commanded protrusion, a
    base roll, then two orthogonal constant-curvature segments (bend1 in
    the local x-z plane, bend2 toward local +y). At zero joints the tip
    sits protrusion + trans ahead of the base along the base axis.
    """
    feed = params.protrusion_mm + arm.trans_mm - params.seg1_len_mm - params.seg2_len_mm
    pose = base.compose((0.0, 0.0, feed), quat_about_z(math.radians(arm.roll_deg)))
    off1, rot1 = arc_transform(math.radians(arm.bend1_deg), 0.0, params.seg1_len_mm)
    pose = pose.compose(off1, rot1)
    off2, rot2 = arc_transform(math.radians(arm.bend2_deg), math.pi / 2.0, params.seg2_len_mm)
    return pose.compose(off2, rot2)


@dataclass(frozen=True)
class MarkerChain:
    """Planar marker positions along the bending section, proximal first.

    Point 1 sits at the proximal end of the bending section; the bend angle
    is estimated from the displacement between points 1 and 8. Further
    points are carried for rendering only.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) < 8:
            raise ValueError("marker chain needs at least 8 points")

    @property
    def delta_x(self) -> float:
        return self.points[7][0] - self.points[0][0]

    @property
    def delta_y(self) -> float:
        return self.points[7][1] - self.points[0][1]


def estimate_bend_from_markers(chain: MarkerChain) -> float:
    """Bend angle in degrees from the marker chord: 2*arctan(dx/dy).

    Exact for markers on a circular arc whose initial tangent lies along
    +y with points 1 and 8 spanning the bend.
    """
    if chain.delta_y == 0.0:
        raise DegenerateMarkers("markers have zero axial displacement")
    return math.degrees(2.0 * math.atan(chain.delta_x / chain.delta_y))
