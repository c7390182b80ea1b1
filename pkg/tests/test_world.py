import math
import random

import pytest

from endoteleop.config import WorldParams
from endoteleop.errors import SceneError
from endoteleop.geometry import IDENTITY_QUAT, TipPose
from endoteleop.world import (
    Event,
    EventKind,
    PlaneFrame,
    Scene,
    Target,
    TargetKind,
    TargetStatus,
    cut_step,
    grasp_step,
    load_scene,
    new_world,
    trial_status,
)

PARAMS = WorldParams()


def scene_dict(targets=None):
    return {
        "name": "t",
        "plane": {"origin": [0.0, 0.0, 200.0], "slope_deg": 45.0, "size_mm": [150.0, 150.0]},
        "targets": targets if targets is not None else [
            {"u": -40.0, "v": -6.0, "kind": "exposed"},
            {"u": -14.0, "v": 8.0, "kind": "covered"},
            {"u": 14.0, "v": -8.0, "kind": "exposed"},
            {"u": 40.0, "v": 6.0, "kind": "covered"},
        ],
    }


def tip_at(p):
    return TipPose(tuple(p), IDENTITY_QUAT)


def on_plane(world, idx, standoff=0.0):
    t = world.targets[idx]
    n = world.scene.plane.normal
    return tip_at(tuple(c + standoff * nc for c, nc in zip(t.center, n)))


# -- scene loading ---------------------------------------------------------------


def test_default_scene_loads_with_two_exposed_two_covered(scene_cfg):
    scene = load_scene(scene_cfg)
    kinds = [t.kind for t in scene.targets]
    assert kinds.count(TargetKind.EXPOSED) == 2
    assert kinds.count(TargetKind.COVERED) == 2
    assert len(scene.targets) == 4


def test_scene_rejects_wrong_target_count():
    cfg = scene_dict()
    cfg["targets"] = cfg["targets"][:3]
    with pytest.raises(SceneError):
        load_scene(cfg)


def test_scene_rejects_out_of_zone_center():
    cfg = scene_dict()
    cfg["targets"][0]["u"] = 60.0
    with pytest.raises(SceneError):
        load_scene(cfg)
    cfg = scene_dict()
    cfg["targets"][0]["v"] = -30.0
    with pytest.raises(SceneError):
        load_scene(cfg)


def test_scene_rejects_kind_imbalance():
    cfg = scene_dict()
    for t in cfg["targets"]:
        t["kind"] = "exposed"
    with pytest.raises(SceneError):
        load_scene(cfg)


def test_scene_plane_axes_are_orthonormal(scene_cfg):
    plane = load_scene(scene_cfg).plane
    for a in (plane.u_axis, plane.v_axis, plane.normal):
        assert math.fsum(c * c for c in a) == pytest.approx(1.0)
    assert sum(a * b for a, b in zip(plane.u_axis, plane.normal)) == pytest.approx(0.0)
    assert sum(a * b for a, b in zip(plane.v_axis, plane.normal)) == pytest.approx(0.0)


# -- cutting ---------------------------------------------------------------------


def test_cut_exposed_current_target():
    world = new_world(load_scene(scene_dict()))
    world, events = cut_step(world, on_plane(world, 0), True, 5, PARAMS)
    assert events == [Event(EventKind.TARGET_CUT, 0)]
    assert world.targets[0].status is TargetStatus.CUT
    assert world.targets[0].cut_tick == 5


def test_cautery_off_produces_no_events():
    world = new_world(load_scene(scene_dict()))
    world, events = cut_step(world, on_plane(world, 0), False, 0, PARAMS)
    assert events == []
    assert world.targets[0].status is TargetStatus.PENDING


def test_covered_target_blocked_until_lifted():
    targets = [
        {"u": -40.0, "v": -6.0, "kind": "covered"},
        {"u": -14.0, "v": 8.0, "kind": "exposed"},
        {"u": 14.0, "v": -8.0, "kind": "exposed"},
        {"u": 40.0, "v": 6.0, "kind": "covered"},
    ]
    world = new_world(load_scene(scene_dict(targets)))
    world, events = cut_step(world, on_plane(world, 0), True, 0, PARAMS)
    assert events == [Event(EventKind.COVERED_BLOCKED, 0)]
    assert world.targets[0].status is TargetStatus.PENDING
    assert world.miss_ticks == ()


def test_miss_far_from_targets_is_failure():
    world = new_world(load_scene(scene_dict()))
    plane = world.scene.plane
    p = tuple(o + 70.0 * u for o, u in zip(plane.origin, plane.u_axis))
    world, events = cut_step(world, tip_at(p), True, 9, PARAMS)
    assert events == [Event(EventKind.MISS_CUT, -1)]
    assert world.miss_ticks == (9,)
    assert all(t.status is TargetStatus.PENDING for t in world.targets)


def test_out_of_order_zone_hit_is_miss():
    world = new_world(load_scene(scene_dict()))
    world, events = cut_step(world, on_plane(world, 2), True, 0, PARAMS)
    assert events == [Event(EventKind.MISS_CUT, 2)]
    assert world.targets[2].status is TargetStatus.PENDING


def test_no_contact_no_event():
    world = new_world(load_scene(scene_dict()))
    world, events = cut_step(world, on_plane(world, 0, standoff=5.0), True, 0, PARAMS)
    assert events == []


def test_burn_episode_fires_once_per_contact():
    world = new_world(load_scene(scene_dict()))
    tip = on_plane(world, 0)
    world, e1 = cut_step(world, tip, True, 0, PARAMS)
    world, e2 = cut_step(world, tip, True, 1, PARAMS)
    world, e3 = cut_step(world, tip, True, 2, PARAMS)
    assert e1 and not e2 and not e3
    # Lift off and touch again: a new episode fires.
    world, _ = cut_step(world, on_plane(world, 0, standoff=6.0), True, 3, PARAMS)
    world, e4 = cut_step(world, tip, True, 4, PARAMS)
    assert e4 == [Event(EventKind.MISS_CUT, 0)]  # already cut -> non-current


def test_cut_within_zone_radius_only():
    world = new_world(load_scene(scene_dict()))
    t = world.targets[0]
    plane = world.scene.plane
    inside = tuple(c + 3.0 * u for c, u in zip(t.center, plane.u_axis))
    outside = tuple(c + 5.5 * u for c, u in zip(t.center, plane.u_axis))
    w1, e1 = cut_step(world, tip_at(inside), True, 0, PARAMS)
    assert e1[0].kind is EventKind.TARGET_CUT
    w2, e2 = cut_step(world, tip_at(outside), True, 0, PARAMS)
    assert e2[0].kind is EventKind.MISS_CUT


# -- grasping and lifting ---------------------------------------------------------


def lift_sequence(world, idx, params=PARAMS):
    """Close at the cover point, then raise the tip; returns worlds after
    closure and after lift."""
    tip0 = on_plane(world, idx, standoff=1.0)
    world, _ = grasp_step(world, tip0, 0.0, params)
    world, _ = grasp_step(world, tip0, 1.0, params)
    assert world.grasp.held_target == idx
    lifted_tip = on_plane(world, idx, standoff=1.0 + params.lift_threshold_mm + 1.0)
    world, events = grasp_step(world, lifted_tip, 1.0, params)
    return world, events


def test_open_grip_never_attaches():
    world = new_world(load_scene(scene_dict()))
    world, _ = grasp_step(world, on_plane(world, 1), 0.0, PARAMS)
    assert world.grasp.held_target is None


def test_closure_away_from_cover_does_not_attach():
    world = new_world(load_scene(scene_dict()))
    world, _ = grasp_step(world, on_plane(world, 1, standoff=20.0), 1.0, PARAMS)
    assert world.grasp.held_target is None


def test_grasp_lift_reaches_lifted_status():
    world = new_world(load_scene(scene_dict()))
    world, events = lift_sequence(world, 1)
    assert world.targets[1].status is TargetStatus.LIFTED
    assert Event(EventKind.TARGET_LIFTED, 1) in events


def test_release_before_threshold_reverts_to_pending():
    world = new_world(load_scene(scene_dict()))
    tip0 = on_plane(world, 1, standoff=1.0)
    world, _ = grasp_step(world, tip0, 0.0, PARAMS)
    world, _ = grasp_step(world, tip0, 1.0, PARAMS)
    small = on_plane(world, 1, standoff=3.0)
    world, _ = grasp_step(world, small, 1.0, PARAMS)
    assert world.targets[1].status is TargetStatus.PENDING
    world, _ = grasp_step(world, small, 0.0, PARAMS)
    assert world.grasp.held_target is None
    assert world.targets[1].status is TargetStatus.PENDING


def test_release_after_lift_drops_cover():
    world = new_world(load_scene(scene_dict()))
    world, _ = lift_sequence(world, 1)
    tip = on_plane(world, 1, standoff=7.0)
    world, events = grasp_step(world, tip, 0.0, PARAMS)
    assert world.targets[1].status is TargetStatus.PENDING
    assert Event(EventKind.TARGET_RELEASED, 1) in events


def test_closed_grip_entering_radius_does_not_attach():
    world = new_world(load_scene(scene_dict()))
    far = on_plane(world, 1, standoff=30.0)
    world, _ = grasp_step(world, far, 1.0, PARAMS)  # closes in free space
    near = on_plane(world, 1, standoff=1.0)
    world, _ = grasp_step(world, near, 1.0, PARAMS)
    assert world.grasp.held_target is None


def test_covered_cut_after_lift():
    targets = [
        {"u": -40.0, "v": -6.0, "kind": "covered"},
        {"u": -14.0, "v": 8.0, "kind": "exposed"},
        {"u": 14.0, "v": -8.0, "kind": "exposed"},
        {"u": 40.0, "v": 6.0, "kind": "covered"},
    ]
    world = new_world(load_scene(scene_dict(targets)))
    world, _ = lift_sequence(world, 0)
    world, events = cut_step(world, on_plane(world, 0), True, 7, PARAMS)
    assert events == [Event(EventKind.TARGET_CUT, 0)]
    assert world.targets[0].status is TargetStatus.CUT


# -- scoring -----------------------------------------------------------------------


def test_fresh_world_incomplete():
    world = new_world(load_scene(scene_dict()))
    res = trial_status(world, 100, None)
    assert not res.completed
    assert res.failures == 0
    assert res.completion_time_s is None


def test_completion_time_arithmetic():
    world = new_world(load_scene(scene_dict()))
    order = [0, 1, 2, 3]
    ticks = [3000, 6000, 9000, 12000]
    for idx, tick in zip(order, ticks):
        if world.targets[idx].kind is TargetKind.COVERED:
            world, _ = lift_sequence(world, idx)
        world, events = cut_step(world, on_plane(world, idx), True, tick, PARAMS)
        assert events[0].kind is EventKind.TARGET_CUT, (idx, events)
        world, _ = cut_step(world, on_plane(world, idx, 9.0), False, tick + 1, PARAMS)
    res = trial_status(world, 100, 200)
    assert res.completed
    assert res.completion_time_s == pytest.approx(118.0)


def test_rigid_transform_invariance():
    """Rotating and translating the whole scene+tip pair changes nothing."""
    import numpy as np

    rng = np.random.default_rng(4)
    angle = 0.81
    rot = np.array([
        [math.cos(angle), -math.sin(angle), 0.0],
        [math.sin(angle), math.cos(angle), 0.0],
        [0.0, 0.0, 1.0],
    ]) @ np.array([
        [1.0, 0.0, 0.0],
        [0.0, math.cos(0.5), -math.sin(0.5)],
        [0.0, math.sin(0.5), math.cos(0.5)],
    ])
    shift = np.array([12.0, -30.0, 55.0])

    base = load_scene(scene_dict())

    def xf(v):
        return tuple(rot @ np.asarray(v) + shift)

    def xf_dir(v):
        return tuple(rot @ np.asarray(v))

    plane = base.plane
    moved = Scene(
        base.name,
        PlaneFrame(xf(plane.origin), xf_dir(plane.u_axis), xf_dir(plane.v_axis),
                   xf_dir(plane.normal), plane.half_u, plane.half_v),
        tuple(Target(xf(t.center), t.kind, t.radius_mm, t.incision_len_mm)
              for t in base.targets),
    )

    w_a, w_b = new_world(base), new_world(moved)
    for _ in range(200):
        p_local = (rng.uniform(-60, 60), rng.uniform(-30, 30), rng.uniform(-4, 8))
        p = tuple(
            o + p_local[0] * u + p_local[1] * v + p_local[2] * n
            for o, u, v, n in zip(plane.origin, plane.u_axis, plane.v_axis, plane.normal)
        )
        cautery = rng.random() < 0.4
        tick = int(rng.integers(0, 1000))
        w_a, ev_a = cut_step(w_a, tip_at(p), cautery, tick, PARAMS)
        w_b, ev_b = cut_step(w_b, tip_at(xf(p)), cautery, tick, PARAMS)
        assert ev_a == ev_b
        assert [t.status for t in w_a.targets] == [t.status for t in w_b.targets]


# -- randomized micro-trace property suite ------------------------------------------


def test_randomized_micro_traces_preserve_task_invariants():
    """>= 1000 random micro-traces: covered targets never cut without being
    lifted at the cut tick, cut order is right-to-left, every miss adds
    exactly one failure, and no target ever leaves the cut state."""
    rng = random.Random(0xBEEF)
    for trial in range(1000):
        world = new_world(load_scene(scene_dict()))
        grasper = on_plane(world, rng.randrange(4), standoff=1.0)
        for step in range(60):
            # Random hook pose biased toward target zones.
            idx = rng.randrange(4)
            t = world.targets[idx]
            plane = world.scene.plane
            du, dv, dn = (rng.uniform(-12, 12), rng.uniform(-12, 12), rng.uniform(-2, 6))
            hook = tip_at(tuple(
                c + du * u + dv * v + dn * n
                for c, u, v, n in zip(t.center, plane.u_axis, plane.v_axis, plane.normal)
            ))
            cautery = rng.random() < 0.4
            statuses_before = [t.status for t in world.targets]
            pending_before = [i for i, t in enumerate(world.targets)
                              if t.status is not TargetStatus.CUT]
            fails_before = len(world.miss_ticks)

            world, events = cut_step(world, hook, cautery, step, PARAMS)

            for ev in events:
                if ev.kind is EventKind.TARGET_CUT:
                    i = ev.target
                    assert i == min(pending_before)
                    if world.targets[i].kind is TargetKind.COVERED:
                        assert statuses_before[i] is TargetStatus.LIFTED
                elif ev.kind is EventKind.MISS_CUT:
                    assert len(world.miss_ticks) == fails_before + 1
                    assert [t.status for t in world.targets] == statuses_before

            # Cut is absorbing.
            for before, after in zip(statuses_before, world.targets):
                if before is TargetStatus.CUT:
                    assert after.status is TargetStatus.CUT

            # Random grasp activity.
            if rng.random() < 0.5:
                gi = rng.randrange(4)
                g_stand = rng.uniform(0.0, 9.0)
                grasper = on_plane(world, gi, standoff=g_stand)
            world, _ = grasp_step(world, grasper, rng.random(), PARAMS)
