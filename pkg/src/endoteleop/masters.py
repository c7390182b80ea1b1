"""Master-side interfaces: foot and hand poses, control schemes, haptics.

Two schemes are supported. In three-limb control the foot drives the
endoscope while both hands drive their instruments. In hand-clutch control
the foot is ignored; one hand (the clutch hand) alternates between the
endoscope and its instrument via two handle buttons, while the other hand
keeps its instrument.

Axis conventions (one normalized record per tick, 19 elements):
    [0..3]   foot: pitch, yaw, lateral x, fore/aft y          in [-1, 1]
    [4..10]  left hand: x, y, z, roll, grip, btn_up, btn_down
    [11..17] right hand: same layout
    [18]     cautery pedal

Foot axis assignment: pitch -> up/down bend, yaw -> left/right bend,
fore/aft -> insertion, lateral -> roll. Clutch-hand assignment when driving
the endoscope: x -> insertion, y -> left/right bend, z -> up/down bend,
roll -> roll; deflections are taken relative to the pose captured at the
last clutch swap, so a swap never commands an instantaneous jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .config import ControlMode, Hand, InstrumentParams, RateConfig
from .errors import InvalidInput
from .slave import InstrumentKind, InstrumentTarget
from .wire import MasterCommand

AXES_LEN = 19

Vel4 = tuple[float, float, float, float]
ZERO_VEL: Vel4 = (0.0, 0.0, 0.0, 0.0)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


@dataclass(frozen=True)
class FootPose:
    """Normalized pedal deflections, each in [-1, 1]."""

    theta_f: float = 0.0
    phi_f: float = 0.0
    x_f: float = 0.0
    y_f: float = 0.0


@dataclass(frozen=True)
class HandPose:
    """Hand interface pose: translations in mm, roll in degrees."""

    x_h: float = 0.0
    y_h: float = 0.0
    z_h: float = 0.0
    gamma_h: float = 0.0
    grip: float = 0.0
    btn_upper: bool = False
    btn_lower: bool = False


CENTERED_HAND = HandPose()


def poses_from_axes(axes, cfg: RateConfig) -> tuple[FootPose, HandPose, HandPose, bool]:
    """Split and denormalize one axes record; clamps every element to range."""
    if len(axes) != AXES_LEN:
        raise InvalidInput(f"axes record must have {AXES_LEN} elements, got {len(axes)}")
    if not all(math.isfinite(a) for a in axes):
        raise InvalidInput("axes record contains non-finite values")
    foot = FootPose(*(_clamp(a, -1.0, 1.0) for a in axes[0:4]))

    def hand(base: int) -> HandPose:
        return HandPose(
            x_h=_clamp(axes[base], -1.0, 1.0) * cfg.hand_travel_mm,
            y_h=_clamp(axes[base + 1], -1.0, 1.0) * cfg.hand_travel_mm,
            z_h=_clamp(axes[base + 2], -1.0, 1.0) * cfg.hand_travel_mm,
            gamma_h=_clamp(axes[base + 3], -1.0, 1.0) * cfg.hand_roll_travel_deg,
            grip=_clamp(axes[base + 4], 0.0, 1.0),
            btn_upper=axes[base + 5] > 0.5,
            btn_lower=axes[base + 6] > 0.5,
        )

    return foot, hand(4), hand(11), axes[18] > 0.5


def deadband_scale(deflection: float, eps: float) -> float:
    """Rescale a normalized deflection so [eps, 1] maps linearly onto (0, 1].

    Anything at or below the dead band is zero; the output saturates at 1.
    """
    a = abs(deflection)
    if a <= eps:
        return 0.0
    out = (a - eps) / (1.0 - eps)
    return math.copysign(min(out, 1.0), deflection)


def foot_to_endoscope_velocity(pose: FootPose, cfg: RateConfig) -> Vel4:
    return (
        deadband_scale(pose.theta_f, cfg.deadband) * cfg.max_bend_rate_dps,
        deadband_scale(pose.phi_f, cfg.deadband) * cfg.max_bend_rate_dps,
        deadband_scale(pose.y_f, cfg.deadband) * cfg.max_trans_rate_mm_s,
        deadband_scale(pose.x_f, cfg.deadband) * cfg.max_roll_rate_dps,
    )


def hand_to_endoscope_velocity(
    pose: HandPose, cfg: RateConfig, anchor: HandPose | None = None
) -> Vel4:
    """Clutch-path endoscope velocity; full hand travel reaches the same
    per-axis maxima as the foot path. Deflections are relative to anchor
    when one is given."""
    ref = anchor if anchor is not None else CENTERED_HAND
    nx = _clamp((pose.x_h - ref.x_h) / cfg.hand_travel_mm, -1.0, 1.0)
    ny = _clamp((pose.y_h - ref.y_h) / cfg.hand_travel_mm, -1.0, 1.0)
    nz = _clamp((pose.z_h - ref.z_h) / cfg.hand_travel_mm, -1.0, 1.0)
    ng = _clamp((pose.gamma_h - ref.gamma_h) / cfg.hand_roll_travel_deg, -1.0, 1.0)
    return (
        deadband_scale(nz, cfg.deadband) * cfg.max_bend_rate_dps,
        deadband_scale(ny, cfg.deadband) * cfg.max_bend_rate_dps,
        deadband_scale(nx, cfg.deadband) * cfg.max_trans_rate_mm_s,
        deadband_scale(ng, cfg.deadband) * cfg.max_roll_rate_dps,
    )


def _linear_joint_map(pose: HandPose, cfg: RateConfig, params: InstrumentParams):
    """Unclamped linear joint values for a hand pose (used both absolutely
    and in delta form for clutch rebasing)."""
    span = params.trans_max_mm - params.trans_min_mm
    return (
        pose.z_h / cfg.hand_travel_mm * params.bend_limit_deg,
        pose.y_h / cfg.hand_travel_mm * params.bend_limit_deg,
        pose.x_h / cfg.hand_travel_mm * span,
    )


def hand_to_instrument_target(
    pose: HandPose, cfg: RateConfig, params: InstrumentParams, kind: InstrumentKind
) -> InstrumentTarget:
    """Position map of hand translations onto instrument joints.

    z -> up/down bend, y -> left/right bend, x -> translation, all scaled so
    full hand travel spans the full joint range; a centered hand commands the
    zero-joint (fully protruded) configuration. Handle roll commands a roll
    rate through the dead band; grip passes through on the grasper.
    """
    b1, b2, tr = _linear_joint_map(pose, cfg, params)
    lim = params.bend_limit_deg
    return InstrumentTarget(
        bend1_deg=_clamp(b1, -lim, lim),
        bend2_deg=_clamp(b2, -lim, lim),
        trans_mm=_clamp(tr, params.trans_min_mm, params.trans_max_mm),
        roll_rate_dps=deadband_scale(pose.gamma_h / cfg.hand_roll_travel_deg, cfg.deadband)
        * cfg.tool_rot_rate_dps,
        grip=pose.grip if kind is InstrumentKind.GRASPER else None,
    )


def haptic_force(deflection: float) -> float:
    """Restoring force (N) for one normalized axis deflection: -2 N at full
    outward deflection, zero at home."""
    return -2.0 * _clamp(deflection, -1.0, 1.0)


class ControlTarget(Enum):
    ENDOSCOPE = "endoscope"
    TOOL = "tool"


@dataclass(frozen=True)
class ClutchState:
    """Which device each hand drives, plus the rebase snapshot of the clutch hand."""

    endoscope_hand: Hand
    left_target: ControlTarget
    right_target: ControlTarget
    rebase_anchor: HandPose
    prev_upper: bool = False
    prev_lower: bool = False

    def hand_target(self, hand: Hand) -> ControlTarget:
        return self.left_target if hand is Hand.LEFT else self.right_target


def initial_clutch_state(endoscope_hand: Hand, clutch_active: bool = True) -> ClutchState:
    # The clutch hand starts out driving the endoscope; without a clutch
    # (three-limb mode) both hands keep their tools permanently.
    def target(hand: Hand) -> ControlTarget:
        if clutch_active and hand is endoscope_hand:
            return ControlTarget.ENDOSCOPE
        return ControlTarget.TOOL

    return ClutchState(
        endoscope_hand=endoscope_hand,
        left_target=target(Hand.LEFT),
        right_target=target(Hand.RIGHT),
        rebase_anchor=CENTERED_HAND,
    )


def clutch_step(state: ClutchState, pose: HandPose) -> tuple[ClutchState, bool]:
    """Advance the clutch FSM one tick on the clutch hand's button edges.

    Upper-button press selects endoscope control, lower selects tool
    control; a press of both in the same tick is ignored (no double swap).
    On every actual swap the current pose is captured as the rebase anchor.
    Returns (new state, swapped).
    """
    up_edge = pose.btn_upper and not state.prev_upper
    down_edge = pose.btn_lower and not state.prev_lower
    current = state.hand_target(state.endoscope_hand)
    desired = current
    if up_edge and not down_edge:
        desired = ControlTarget.ENDOSCOPE
    elif down_edge and not up_edge:
        desired = ControlTarget.TOOL

    swapped = desired is not current
    new = replace(state, prev_upper=pose.btn_upper, prev_lower=pose.btn_lower)
    if swapped:
        if state.endoscope_hand is Hand.LEFT:
            new = replace(new, left_target=desired, rebase_anchor=pose)
        else:
            new = replace(new, right_target=desired, rebase_anchor=pose)
    return new, swapped


def _freeze(target: InstrumentTarget) -> InstrumentTarget:
    # A roll rate is not a holdable position; parking a tool zeroes it.
    return replace(target, roll_rate_dps=0.0)


@dataclass(frozen=True)
class MasterState:
    """Everything the master side carries between ticks."""

    mode: ControlMode
    rates: RateConfig
    grasper_params: InstrumentParams
    hook_params: InstrumentParams
    clutch: ClutchState
    seq: int = 0
    # Clutch-hand tool rebasing: held target while driving the endoscope,
    # and the (target, pose) pair captured at the last swap back to the tool.
    frozen_tool_target: InstrumentTarget = InstrumentTarget()
    tool_base_target: InstrumentTarget = InstrumentTarget()
    # Introspection for arbitration checks: which source fed the endoscope
    # velocity this tick ("foot", "left", "right" or "none").
    endo_source: str = "none"


def initial_master_state(
    mode: ControlMode,
    rates: RateConfig,
    grasper_params: InstrumentParams,
    hook_params: InstrumentParams,
    clutch_hand: Hand,
) -> MasterState:
    clutch_tool_kind = InstrumentKind.GRASPER if clutch_hand is Hand.LEFT else InstrumentKind.HOOK
    neutral = hand_to_instrument_target(
        CENTERED_HAND, rates,
        grasper_params if clutch_hand is Hand.LEFT else hook_params,
        clutch_tool_kind,
    )
    return MasterState(
        mode=mode, rates=rates,
        grasper_params=grasper_params, hook_params=hook_params,
        clutch=initial_clutch_state(clutch_hand,
                                    clutch_active=mode is ControlMode.HAND_CLUTCH),
        frozen_tool_target=_freeze(neutral),
        tool_base_target=_freeze(neutral),
    )


def _rebased_target(
    ms: MasterState, pose: HandPose, params: InstrumentParams, kind: InstrumentKind
) -> InstrumentTarget:
    """Clutch-hand tool target: base target plus the joint-space delta since
    the last swap, clamped to joint ranges."""
    anchor = ms.clutch.rebase_anchor
    db1, db2, dtr = (
        p - a for p, a in zip(
            _linear_joint_map(pose, ms.rates, params),
            _linear_joint_map(anchor, ms.rates, params),
        )
    )
    base = ms.tool_base_target
    lim = params.bend_limit_deg
    base_grip = base.grip if base.grip is not None else 0.0
    # Roll rate is taken relative to the anchor too, so the device sees no
    # instantaneous command at the swap tick even on a rolled handle.
    roll_defl = (pose.gamma_h - anchor.gamma_h) / ms.rates.hand_roll_travel_deg
    return InstrumentTarget(
        bend1_deg=_clamp(base.bend1_deg + db1, -lim, lim),
        bend2_deg=_clamp(base.bend2_deg + db2, -lim, lim),
        trans_mm=_clamp(base.trans_mm + dtr, params.trans_min_mm, params.trans_max_mm),
        roll_rate_dps=deadband_scale(_clamp(roll_defl, -1.0, 1.0), ms.rates.deadband)
        * ms.rates.tool_rot_rate_dps,
        grip=_clamp(base_grip + (pose.grip - anchor.grip), 0.0, 1.0)
        if kind is InstrumentKind.GRASPER else None,
    )


def compose_master_command(
    ms: MasterState,
    foot: FootPose,
    left: HandPose,
    right: HandPose,
    cautery_pedal: bool,
    tick: int,
) -> tuple[MasterState, MasterCommand]:
    """Arbitrate all master inputs into one slave command.

    Exactly one source feeds the endoscope velocity: the foot in three-limb
    mode, the clutch hand while it holds endoscope control, nobody
    otherwise. A hand never feeds a tool and the endoscope in the same tick;
    the clutch hand's tool holds its last target while the hand is away.
    """
    rates = ms.rates
    if ms.mode is ControlMode.THREE_LIMB:
        endo_vel = foot_to_endoscope_velocity(foot, rates)
        left_t = hand_to_instrument_target(left, rates, ms.grasper_params, InstrumentKind.GRASPER)
        right_t = hand_to_instrument_target(right, rates, ms.hook_params, InstrumentKind.HOOK)
        ms = replace(ms, endo_source="foot")
    else:
        clutch_hand = ms.clutch.endoscope_hand
        clutch_pose = left if clutch_hand is Hand.LEFT else right
        clutch_params = ms.grasper_params if clutch_hand is Hand.LEFT else ms.hook_params
        clutch_kind = InstrumentKind.GRASPER if clutch_hand is Hand.LEFT else InstrumentKind.HOOK

        clutch, swapped = clutch_step(ms.clutch, clutch_pose)
        ms = replace(ms, clutch=clutch)
        driving_endo = clutch.hand_target(clutch_hand) is ControlTarget.ENDOSCOPE
        if swapped and not driving_endo:
            # Swapping back to the tool: future deltas accrue on the held target.
            ms = replace(ms, tool_base_target=ms.frozen_tool_target)

        if driving_endo:
            endo_vel = hand_to_endoscope_velocity(clutch_pose, rates, anchor=clutch.rebase_anchor)
            clutch_tool_t = ms.frozen_tool_target
            ms = replace(ms, endo_source=clutch_hand.value)
        else:
            endo_vel = ZERO_VEL
            clutch_tool_t = _rebased_target(ms, clutch_pose, clutch_params, clutch_kind)
            ms = replace(ms, frozen_tool_target=_freeze(clutch_tool_t), endo_source="none")

        if clutch_hand is Hand.LEFT:
            left_t = clutch_tool_t
            right_t = hand_to_instrument_target(right, rates, ms.hook_params, InstrumentKind.HOOK)
        else:
            left_t = hand_to_instrument_target(left, rates, ms.grasper_params, InstrumentKind.GRASPER)
            right_t = clutch_tool_t

    cmd = MasterCommand(
        tick=tick, seq=ms.seq, mode=ms.mode, endo_vel=endo_vel,
        left_target=left_t, right_target=right_t, cautery=cautery_pedal,
    )
    return replace(ms, seq=ms.seq + 1), cmd
