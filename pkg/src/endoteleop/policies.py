"""Scripted operators: deterministic closed-loop policies that complete the
four-target task through the master interfaces.

A policy is a generator yielding one 19-element axes record per tick while
reading the live session state (the generator plays the human: it watches
the slave and steers the masters). Policies are used to produce the bundled
reference traces and by `simulate --policy`; replays never need them.
"""

from __future__ import annotations

import numpy as np

from .config import ControlMode, Hand
from .errors import EndoteleopError
from .geometry import vec_dist, vec_sub
from .masters import AXES_LEN, ControlTarget
from .session import Session
from .slave import InstrumentArmState, InstrumentKind, instrument_fk
from .world import TargetKind, TargetStatus

# Axes record slots.
FOOT_PITCH, FOOT_YAW, FOOT_X, FOOT_Y = 0, 1, 2, 3
LX, LY, LZ, LROLL, LGRIP, LBTN_UP, LBTN_DOWN = 4, 5, 6, 7, 8, 9, 10
RX, RY, RZ, RROLL, RGRIP, RBTN_UP, RBTN_DOWN = 11, 12, 13, 14, 15, 16, 17
CAUTERY = 18

HOVER_STANDOFF_MM = 6.0
CUT_STANDOFF_MM = 0.5
GRASP_STANDOFF_MM = 3.0
LIFT_STANDOFF_MM = 11.0


class PolicyStuck(EndoteleopError):
    """A scripted operator failed to make progress."""


def _solve3(residual, x0, lo, hi, iters=60, damping=1e-8):
    """Damped Gauss-Newton on a 3-residual/3-unknown problem with box bounds."""
    x = np.asarray(x0, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    for _ in range(iters):
        r = np.asarray(residual(x), dtype=float)
        if float(np.dot(r, r)) < 1e-10:
            break
        jac = np.empty((3, 3))
        for j in range(3):
            step = 1e-4
            xp = x.copy()
            xp[j] += step
            jac[:, j] = (np.asarray(residual(xp)) - r) / step
        try:
            dx = np.linalg.solve(jac.T @ jac + damping * np.eye(3), -jac.T @ r)
        except np.linalg.LinAlgError:
            break
        x = np.clip(x + dx, lo, hi)
    return x


def _drive(err: float, tol: float, slow_zone: float, deadband: float) -> float:
    """Normalized axis deflection commanding a velocity toward zero error.

    The magnitude is dead-band-compensated so the commanded rate is
    proportional to min(|err| / slow_zone, 1), floored to keep creeping."""
    if abs(err) <= tol:
        return 0.0
    f = min(abs(err) / slow_zone, 1.0)
    f = max(f, 0.02)
    d = deadband + f * (1.0 - deadband)
    return d if err > 0 else -d


class ScriptedOperator:
    """Sequences scope moves, grasps, lifts and cuts for every target."""

    def __init__(self, session: Session, phase_timeout_ticks: int = 4000):
        self.s = session
        self.cfg = session.config
        self.axes = [0.0] * AXES_LEN
        self.timeout = phase_timeout_ticks
        self.clutch_mode = self.cfg.mode is ControlMode.HAND_CLUTCH
        if self.clutch_mode and self.cfg.clutch_hand is not Hand.RIGHT:
            raise PolicyStuck("scripted clutch operator assumes the right hand on the clutch")

    # -- low-level helpers ---------------------------------------------------

    def _frame(self):
        return list(self.axes)

    def _hook_base(self):
        return self.s.scope_tip.compose(self.cfg.hook.channel_offset, (1.0, 0.0, 0.0, 0.0))

    def _grasper_base(self):
        return self.s.scope_tip.compose(self.cfg.grasper.channel_offset, (1.0, 0.0, 0.0, 0.0))

    def _offset_point(self, target_idx: int, standoff: float):
        t = self.s.world.targets[target_idx]
        n = self.s.world.scene.plane.normal
        return tuple(c + standoff * nc for c, nc in zip(t.center, n))

    def _scope_goal_for(self, target_idx: int):
        """Scope (theta, phi, y) placing the parked hook tip at the hover
        point above the target; roll stays at zero throughout."""
        from .slave import EndoscopeState, endoscope_fk

        goal_point = self._offset_point(target_idx, HOVER_STANDOFF_MM)
        preset = InstrumentArmState(kind=InstrumentKind.HOOK, trans_mm=-8.0)

        def residual(x):
            st = EndoscopeState(theta_e_deg=x[0], phi_e_deg=x[1], y_e_mm=x[2])
            tip = endoscope_fk(st, self.cfg.endoscope.bend_len_mm)
            base = tip.compose(self.cfg.hook.channel_offset, (1.0, 0.0, 0.0, 0.0))
            p = instrument_fk(preset, base, self.cfg.hook).position
            return vec_sub(p, goal_point)

        x = _solve3(residual, (5.0, 0.0, 40.0), (-85.0, -85.0, 0.0), (85.0, 85.0, 480.0))
        err = np.asarray(residual(x))
        if float(np.sqrt(np.dot(err, err))) > 1.0:
            raise PolicyStuck(f"no scope pose found for target {target_idx}: residual {err}")
        return float(x[0]), float(x[1]), float(x[2])

    def _arm_goal(self, arm_kind: InstrumentKind, point):
        """Instrument (bend1, bend2, trans) putting the tip at a world point,
        with the scope parked."""
        params = self.cfg.hook if arm_kind is InstrumentKind.HOOK else self.cfg.grasper
        base = self._hook_base() if arm_kind is InstrumentKind.HOOK else self._grasper_base()
        grip = None if arm_kind is InstrumentKind.HOOK else 0.0

        def residual(x):
            arm = InstrumentArmState(kind=arm_kind, bend1_deg=x[0], bend2_deg=x[1],
                                     trans_mm=x[2], grip=grip)
            return vec_sub(instrument_fk(arm, base, params).position, point)

        lim = params.bend_limit_deg - 3.0
        x = _solve3(residual, (0.0, 0.0, -8.0), (-lim, -lim, params.trans_min_mm + 2.0),
                    (lim, lim, params.trans_max_mm))
        err = np.asarray(residual(x))
        if float(np.sqrt(np.dot(err, err))) > 1.0:
            raise PolicyStuck(f"arm IK failed for {arm_kind.value}: residual {err}")
        return float(x[0]), float(x[1]), float(x[2])

    def _set_arm_axes(self, arm_kind: InstrumentKind, joints, grip: float | None = None):
        """Write hand axes commanding the given joint targets (absolute map)."""
        rates = self.cfg.rates
        params = self.cfg.hook if arm_kind is InstrumentKind.HOOK else self.cfg.grasper
        b1, b2, tr = joints
        span = params.trans_max_mm - params.trans_min_mm
        zn = b1 / params.bend_limit_deg
        yn = b2 / params.bend_limit_deg
        xn = tr / span
        if arm_kind is InstrumentKind.HOOK and self.clutch_mode:
            # Rebased relative map for the clutch hand.
            ms = self.s.master
            anchor = ms.clutch.rebase_anchor
            base = ms.tool_base_target
            xn = anchor.x_h / rates.hand_travel_mm + (tr - base.trans_mm) / span
            yn = anchor.y_h / rates.hand_travel_mm + (b2 - base.bend2_deg) / params.bend_limit_deg
            zn = anchor.z_h / rates.hand_travel_mm + (b1 - base.bend1_deg) / params.bend_limit_deg
        idx = (RX, RY, RZ) if arm_kind is InstrumentKind.HOOK else (LX, LY, LZ)
        for i, v in zip(idx, (xn, yn, zn)):
            if abs(v) > 1.0:
                raise PolicyStuck(f"axis {i} out of travel: {v:.3f}")
            self.axes[i] = v
        if grip is not None:
            self.axes[LGRIP if arm_kind is InstrumentKind.GRASPER else RGRIP] = grip

    def _arm_tip(self, arm_kind: InstrumentKind):
        return self.s.hook_tip if arm_kind is InstrumentKind.HOOK else self.s.grasper_tip

    # -- phase generators ----------------------------------------------------

    def _wait(self, predicate, what: str):
        for _ in range(self.timeout):
            if predicate():
                return
            yield self._frame()
        raise PolicyStuck(f"timed out waiting for {what} at tick {self.s.tick}")

    def dwell(self, ticks: int):
        for _ in range(ticks):
            yield self._frame()

    def _clutch_target(self) -> ControlTarget:
        return self.s.master.clutch.hand_target(Hand.RIGHT)

    def ensure_clutch(self, want: ControlTarget):
        if not self.clutch_mode or self._clutch_target() is want:
            return
        btn = RBTN_UP if want is ControlTarget.ENDOSCOPE else RBTN_DOWN
        self.axes[btn] = 1.0
        yield self._frame()
        self.axes[btn] = 0.0
        yield self._frame()
        if self._clutch_target() is not want:
            raise PolicyStuck(f"clutch swap to {want.value} did not take")

    def _scope_drive_axes(self, goal):
        """Write the axes that servo the scope toward (theta, phi, y)."""
        e = self.s.endoscope
        eps = self.cfg.rates.deadband
        d_theta = _drive(goal[0] - e.theta_e_deg, 0.15, 10.0, eps)
        d_phi = _drive(goal[1] - e.phi_e_deg, 0.15, 10.0, eps)
        d_y = _drive(goal[2] - e.y_e_mm, 0.15, 10.0, eps)
        if not self.clutch_mode:
            self.axes[FOOT_PITCH] = d_theta
            self.axes[FOOT_YAW] = d_phi
            self.axes[FOOT_Y] = d_y
            self.axes[FOOT_X] = 0.0
        else:
            rates = self.cfg.rates
            anchor = self.s.master.clutch.rebase_anchor
            self.axes[RZ] = anchor.z_h / rates.hand_travel_mm + d_theta
            self.axes[RY] = anchor.y_h / rates.hand_travel_mm + d_phi
            self.axes[RX] = anchor.x_h / rates.hand_travel_mm + d_y
            self.axes[RROLL] = anchor.gamma_h / rates.hand_roll_travel_deg

    def _scope_at(self, goal) -> bool:
        e = self.s.endoscope
        return (abs(goal[0] - e.theta_e_deg) <= 0.2 and abs(goal[1] - e.phi_e_deg) <= 0.2
                and abs(goal[2] - e.y_e_mm) <= 0.2)

    def move_scope(self, goal):
        yield from self.ensure_clutch(ControlTarget.ENDOSCOPE)
        for _ in range(self.timeout):
            if self._scope_at(goal):
                break
            self._scope_drive_axes(goal)
            yield self._frame()
        else:
            raise PolicyStuck(f"scope servo stuck at tick {self.s.tick}")
        # Park: zero every scope-driving deflection.
        self._scope_drive_axes((self.s.endoscope.theta_e_deg, self.s.endoscope.phi_e_deg,
                                self.s.endoscope.y_e_mm))
        yield self._frame()

    def move_arm(self, arm_kind: InstrumentKind, point, tol_mm: float = 1.0,
                 grip: float | None = None):
        if arm_kind is InstrumentKind.HOOK:
            yield from self.ensure_clutch(ControlTarget.TOOL)
        for attempt in range(6):
            goal = self._arm_goal(arm_kind, point)
            self._set_arm_axes(arm_kind, goal, grip)
            settle = 0
            while settle < self.timeout // 4:
                if vec_dist(self._arm_tip(arm_kind).position, point) <= tol_mm:
                    return
                yield self._frame()
                settle += 1
        raise PolicyStuck(f"{arm_kind.value} never reached {point} (tick {self.s.tick})")

    def set_grip(self, value: float):
        self.axes[LGRIP] = value
        yield from self._wait(lambda: abs(self.s.left_arm.grip - value) < 0.02,
                              f"grip {value}")

    def cautery_pulse(self, ticks: int = 5):
        self.axes[CAUTERY] = 1.0
        for _ in range(ticks):
            yield self._frame()
        self.axes[CAUTERY] = 0.0
        yield self._frame()

    # -- whole trial ----------------------------------------------------------

    def run(self):
        """Generator for a full four-target trial."""
        park_dwell = 40
        for i, _ in enumerate(self.s.world.targets):
            target = self.s.world.targets[i]
            goal = self._scope_goal_for(i)
            yield from self.move_scope(goal)
            yield from self.dwell(park_dwell)

            if target.kind is TargetKind.COVERED:
                yield from self.move_arm(
                    InstrumentKind.GRASPER, self._offset_point(i, GRASP_STANDOFF_MM), grip=0.0)
                yield from self.dwell(park_dwell)
                yield from self.set_grip(1.0)
                if self.s.world.grasp.held_target != i:
                    raise PolicyStuck(f"grasp of target {i} failed")
                yield from self.move_arm(
                    InstrumentKind.GRASPER, self._offset_point(i, LIFT_STANDOFF_MM), tol_mm=1.5)
                yield from self._wait(
                    lambda: self.s.world.targets[i].status is TargetStatus.LIFTED,
                    f"lift of target {i}")
                yield from self.dwell(park_dwell)

            yield from self.move_arm(InstrumentKind.HOOK, self._offset_point(i, CUT_STANDOFF_MM),
                                     tol_mm=0.8)
            yield from self.dwell(park_dwell)
            yield from self.cautery_pulse()
            yield from self._wait(
                lambda: self.s.world.targets[i].status is TargetStatus.CUT,
                f"cut of target {i}")
            # Post-cut dwell: long enough for trace-mutation experiments to
            # inject misfires while the hook is still parked on the plane.
            yield from self.dwell(70)

            if target.kind is TargetKind.COVERED:
                yield from self.set_grip(0.0)
                yield from self.move_arm(
                    InstrumentKind.GRASPER, self._offset_point(i, 14.0), tol_mm=2.0)
            yield from self.move_arm(InstrumentKind.HOOK, self._offset_point(i, 12.0),
                                     tol_mm=2.0)
            yield from self.dwell(park_dwell)


def idle_policy(session: Session, ticks: int = 200):
    for _ in range(ticks):
        yield [0.0] * AXES_LEN


def run_policy(session: Session, policy_gen, max_ticks: int = 60000):
    """Drive a session with a policy generator until it finishes."""
    for axes in policy_gen:
        if session.tick > max_ticks:
            raise PolicyStuck(f"policy exceeded {max_ticks} ticks")
        session.tick_once(axes)
    return session.trial_result()


def make_policy(name: str, session: Session):
    if name == "task":
        return ScriptedOperator(session).run()
    if name == "idle":
        return idle_policy(session)
    raise ValueError(f"unknown policy {name!r} (have: task, idle)")
