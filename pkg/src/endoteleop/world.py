"""Ex-vivo cutting task: inclined tissue plane, four ordered targets, scoring.

The tissue is rigid geometry. A trial is four targets cut right-to-left with
the cautery hook; covered targets must first be lifted with the grasper.
Burn events are classified once per contact episode (the first tick at which
the hook touches the plane with cautery on), so each distinct touch produces
exactly one TargetCut / CoveredBlocked / MissCut event regardless of how
long the pedal stays down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum, IntEnum

from .config import WorldParams
from .errors import SceneError
from .geometry import TipPose, Vec3, vec_dot, vec_sub

EXPOSED_ZONE_RADIUS_MM = 4.0
COVERED_INCISION_LEN_MM = 15.0

# Placement zone for target centers, plane-local half-extents (mm):
# along-slope-width x up-slope x normal.
ZONE_HALF_U = 50.0
ZONE_HALF_V = 25.0
ZONE_HALF_N = 25.0


class TargetKind(Enum):
    EXPOSED = "exposed"
    COVERED = "covered"


class TargetStatus(Enum):
    PENDING = "pending"
    LIFTED = "lifted"
    CUT = "cut"


class EventKind(IntEnum):
    TARGET_CUT = 1
    MISS_CUT = 2
    COVERED_BLOCKED = 3
    TARGET_LIFTED = 4
    TARGET_RELEASED = 5
    ENDO_MOTION_START = 6


@dataclass(frozen=True)
class Event:
    kind: EventKind
    target: int = -1

    def to_json(self) -> list:
        return [int(self.kind), self.target]

    @classmethod
    def from_json(cls, obj: list) -> "Event":
        return cls(EventKind(obj[0]), int(obj[1]))


@dataclass(frozen=True)
class PlaneFrame:
    """Rectangle pose: origin plus orthonormal in-plane axes u, v and normal n."""

    origin: Vec3
    u_axis: Vec3
    v_axis: Vec3
    normal: Vec3
    half_u: float
    half_v: float

    def local_coords(self, p: Vec3) -> tuple[float, float, float]:
        d = vec_sub(p, self.origin)
        return vec_dot(d, self.u_axis), vec_dot(d, self.v_axis), vec_dot(d, self.normal)


@dataclass(frozen=True)
class Target:
    center: Vec3
    kind: TargetKind
    radius_mm: float | None
    incision_len_mm: float | None
    status: TargetStatus = TargetStatus.PENDING
    cut_tick: int | None = None

    @property
    def zone_radius_mm(self) -> float:
        # The paper-scale marked zone for exposed targets; for covered ones
        # the incision length bounds the cuttable region.
        if self.kind is TargetKind.EXPOSED:
            return self.radius_mm
        return self.incision_len_mm / 2.0


@dataclass(frozen=True)
class Scene:
    name: str
    plane: PlaneFrame
    targets: tuple[Target, ...]


@dataclass(frozen=True)
class GraspState:
    held_target: int | None = None
    lift_mm: float = 0.0
    attach_point: Vec3 | None = None


@dataclass(frozen=True)
class World:
    scene: Scene
    targets: tuple[Target, ...]
    grasp: GraspState = GraspState()
    burn_active: bool = False
    prev_grip: float = 0.0
    miss_ticks: tuple[int, ...] = ()


def load_scene(cfg: dict) -> Scene:
    """Build and validate a Scene from its config dict.

    Schema: {"name": str, "plane": {"origin": [x,y,z], "slope_deg": float,
    "size_mm": [w,h]}, "targets": [{"u": float, "v": float, "kind":
    "exposed"|"covered"}, ...]} with target centers given in plane-local
    coordinates (u along the width, v up the slope).
    """
    try:
        plane_cfg = cfg["plane"]
        origin = tuple(float(c) for c in plane_cfg["origin"])
        slope = math.radians(float(plane_cfg["slope_deg"]))
        size = plane_cfg["size_mm"]
        target_cfgs = cfg["targets"]
    except (KeyError, TypeError) as exc:
        raise SceneError(f"malformed scene config: {exc}") from exc

    if len(origin) != 3:
        raise SceneError("plane origin must be a 3-vector")
    # Slope tilts the surface about the world y axis; at 45 deg the normal
    # points halfway between "up" (+x) and "back toward the scope" (-z).
    u_axis = (0.0, 1.0, 0.0)
    v_axis = (math.cos(slope), 0.0, math.sin(slope))
    normal = (math.sin(slope), 0.0, -math.cos(slope))
    plane = PlaneFrame(origin, u_axis, v_axis, normal, size[0] / 2.0, size[1] / 2.0)

    if len(target_cfgs) != 4:
        raise SceneError(f"scene needs exactly 4 targets, got {len(target_cfgs)}")
    targets = []
    for i, t in enumerate(target_cfgs):
        try:
            u, v = float(t["u"]), float(t["v"])
            kind = TargetKind(t["kind"])
        except (KeyError, ValueError, TypeError) as exc:
            raise SceneError(f"malformed target {i}: {exc}") from exc
        if abs(u) > ZONE_HALF_U or abs(v) > ZONE_HALF_V:
            raise SceneError(f"target {i} center ({u}, {v}) outside placement zone")
        center = (
            origin[0] + u * u_axis[0] + v * v_axis[0],
            origin[1] + u * u_axis[1] + v * v_axis[1],
            origin[2] + u * u_axis[2] + v * v_axis[2],
        )
        if kind is TargetKind.EXPOSED:
            targets.append(Target(center, kind, EXPOSED_ZONE_RADIUS_MM, None))
        else:
            targets.append(Target(center, kind, None, COVERED_INCISION_LEN_MM))

    kinds = [t.kind for t in targets]
    if kinds.count(TargetKind.EXPOSED) != 2 or kinds.count(TargetKind.COVERED) != 2:
        raise SceneError("scene needs two exposed and two covered targets")
    return Scene(str(cfg.get("name", "unnamed")), plane, tuple(targets))


def new_world(scene: Scene) -> World:
    return World(scene=scene, targets=scene.targets)


def _current_index(targets: tuple[Target, ...]) -> int | None:
    for i, t in enumerate(targets):
        if t.status is not TargetStatus.CUT:
            return i
    return None


def cut_step(
    world: World, hook_tip: TipPose, cautery: bool, tick: int, params: WorldParams
) -> tuple[World, list[Event]]:
    """Classify one tick of hook/cautery activity.

    A new burn episode starts when the cautery is on and the hook tip is
    within the contact tolerance of the plane rectangle; the episode is
    classified once, against the target whose zone contains the tip:
    current target (exposed, or covered-and-lifted) -> cut; current covered
    but not lifted -> blocked; any other zone or no zone -> miss failure.
    """
    u, v, n = world.scene.plane.local_coords(hook_tip.position)
    touching = (
        abs(n) <= params.contact_tol_mm
        and abs(u) <= world.scene.plane.half_u
        and abs(v) <= world.scene.plane.half_v
    )
    active = bool(cautery) and touching
    events: list[Event] = []
    targets = world.targets
    miss_ticks = world.miss_ticks

    if active and not world.burn_active:
        current = _current_index(targets)
        hit = None
        for i, t in enumerate(targets):
            tu, tv, _ = world.scene.plane.local_coords(t.center)
            if math.hypot(u - tu, v - tv) <= t.zone_radius_mm:
                hit = i
                break
        if hit is not None and hit == current:
            t = targets[hit]
            if t.kind is TargetKind.EXPOSED or t.status is TargetStatus.LIFTED:
                targets = targets[:hit] + (
                    replace(t, status=TargetStatus.CUT, cut_tick=tick),
                ) + targets[hit + 1:]
                events.append(Event(EventKind.TARGET_CUT, hit))
            else:
                events.append(Event(EventKind.COVERED_BLOCKED, hit))
        else:
            events.append(Event(EventKind.MISS_CUT, -1 if hit is None else hit))
            miss_ticks = miss_ticks + (tick,)

    return replace(world, targets=targets, burn_active=active, miss_ticks=miss_ticks), events


def grasp_step(
    world: World, grasper_tip: TipPose, grip: float, params: WorldParams
) -> tuple[World, list[Event]]:
    """Track grasp attachment and tissue-cover lift.

    Closing the grip (crossing the close threshold) within the grasp radius
    of a covered target's cover point attaches it; while attached, the lift
    is the tip displacement along the plane normal since attachment. The
    cover counts as lifted only while held above the lift threshold;
    opening the grip (or lowering the cover) drops it back.
    """
    g = world.grasp
    targets = world.targets
    events: list[Event] = []
    closed = grip >= params.grip_close_threshold

    if g.held_target is None:
        rising = closed and world.prev_grip < params.grip_close_threshold
        if rising:
            for i, t in enumerate(targets):
                if t.kind is not TargetKind.COVERED or t.status is TargetStatus.CUT:
                    continue
                d = vec_sub(grasper_tip.position, t.center)
                if math.sqrt(vec_dot(d, d)) <= params.grasp_radius_mm:
                    g = GraspState(held_target=i, lift_mm=0.0,
                                   attach_point=grasper_tip.position)
                    break
    else:
        i = g.held_target
        t = targets[i]
        if not closed:
            if t.status is TargetStatus.LIFTED:
                targets = targets[:i] + (replace(t, status=TargetStatus.PENDING),) + targets[i + 1:]
                events.append(Event(EventKind.TARGET_RELEASED, i))
            g = GraspState()
        else:
            lift = vec_dot(
                vec_sub(grasper_tip.position, g.attach_point), world.scene.plane.normal
            )
            g = replace(g, lift_mm=lift)
            if t.status is TargetStatus.PENDING and lift >= params.lift_threshold_mm:
                targets = targets[:i] + (replace(t, status=TargetStatus.LIFTED),) + targets[i + 1:]
                events.append(Event(EventKind.TARGET_LIFTED, i))
            elif t.status is TargetStatus.LIFTED and lift < params.lift_threshold_mm:
                targets = targets[:i] + (replace(t, status=TargetStatus.PENDING),) + targets[i + 1:]
                events.append(Event(EventKind.TARGET_RELEASED, i))

    return replace(world, targets=targets, grasp=g, prev_grip=grip), events


@dataclass(frozen=True)
class TrialResult:
    target_statuses: tuple[str, ...]
    cut_ticks: tuple[int | None, ...]
    failures: int
    failure_ticks: tuple[int, ...]
    completed: bool
    completion_time_s: float | None

    def to_dict(self) -> dict:
        return {
            "target_statuses": list(self.target_statuses),
            "cut_ticks": list(self.cut_ticks),
            "failures": self.failures,
            "failure_ticks": list(self.failure_ticks),
            "completed": self.completed,
            "completion_time_s": self.completion_time_s,
        }


def trial_status(
    world: World, tick_hz: int, first_motion_tick: int | None
) -> TrialResult:
    """Score a trial from the world state.

    Completion time runs from the first endoscope motion to the cut of the
    final target; it is present only once all four targets are cut.
    """
    completed = all(t.status is TargetStatus.CUT for t in world.targets)
    completion = None
    if completed and first_motion_tick is not None:
        final_cut = max(t.cut_tick for t in world.targets)
        completion = (final_cut - first_motion_tick) / tick_hz
    return TrialResult(
        target_statuses=tuple(t.status.value for t in world.targets),
        cut_ticks=tuple(t.cut_tick for t in world.targets),
        failures=len(world.miss_ticks),
        failure_ticks=world.miss_ticks,
        completed=completed,
        completion_time_s=completion,
    )
