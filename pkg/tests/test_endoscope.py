import math

import pytest

from endoteleop.config import EndoscopeParams
from endoteleop.errors import InvalidCommand
from endoteleop.geometry import quat_rotate, vec_dist
from endoteleop.slave import (
    EndoscopeState,
    endoscope_fk,
    initial_endoscope_state,
    step_endoscope,
)

PARAMS = EndoscopeParams()


def default_backlash():
    from endoteleop.slave import BacklashModel

    return BacklashModel(PARAMS.backlash_half_width_deg)


def arc_tip_oracle(bend_deg, length):
    """Planar arc endpoint from elementary geometry: radius r = L / beta,
    offset r(1 - cos beta) across, r sin beta along."""
    beta = math.radians(bend_deg)
    r = length / beta
    return r * (1.0 - math.cos(beta)), r * math.sin(beta)


def test_zero_command_leaves_state_unchanged():
    s0 = initial_endoscope_state(PARAMS)
    s1 = step_endoscope(s0, (0.0, 0.0, 0.0, 0.0), 0.01, PARAMS)
    assert s1 == s0


def test_translation_clamps_at_travel():
    s = EndoscopeState(y_e_mm=500.0, backlash_ud=default_backlash(),
                       backlash_lr=default_backlash())
    s = step_endoscope(s, (0.0, 0.0, 10.0, 0.0), 1.0, PARAMS)
    assert s.y_e_mm == 500.0
    s = step_endoscope(s, (0.0, 0.0, -10.0, 0.0), 1.0, PARAMS)
    assert s.y_e_mm == 490.0


def test_roll_and_translation_are_decoupled():
    s = EndoscopeState(y_e_mm=123.456789, backlash_ud=default_backlash(),
                       backlash_lr=default_backlash())
    y_bits = s.y_e_mm
    for _ in range(100):
        s = step_endoscope(s, (0.0, 0.0, 0.0, 90.0), 1.0, PARAMS)
    assert s.y_e_mm == y_bits  # bitwise
    gamma = s.gamma_e_deg
    for _ in range(100):
        s = step_endoscope(s, (0.0, 0.0, 3.0, 0.0), 0.01, PARAMS)
    assert s.gamma_e_deg == gamma


def test_roll_integrates_and_wraps():
    s = initial_endoscope_state(PARAMS)
    s = step_endoscope(s, (0.0, 0.0, 0.0, 90.0), 1.0, PARAMS)
    assert s.gamma_e_deg == pytest.approx(90.0)
    for _ in range(5):
        s = step_endoscope(s, (0.0, 0.0, 0.0, 90.0), 1.0, PARAMS)
    assert 0.0 <= s.gamma_e_deg < 360.0


def test_bend_follows_motor_through_play():
    s = initial_endoscope_state(PARAMS)
    for _ in range(100):
        s = step_endoscope(s, (30.0, 0.0, 0.0, 0.0), 0.01, PARAMS)
    assert s.ud_motor_deg == pytest.approx(30.0)
    assert s.theta_e_deg == pytest.approx(7.5)
    assert abs(s.backlash_ud.play_state_deg - s.ud_motor_deg) <= PARAMS.backlash_half_width_deg


def test_bend_limit_holds_under_saturation():
    s = initial_endoscope_state(PARAMS)
    for _ in range(300):
        s = step_endoscope(s, (500.0, -500.0, 0.0, 0.0), 0.01, PARAMS)
    assert s.theta_e_deg <= PARAMS.bend_limit_deg
    assert s.phi_e_deg >= -PARAMS.bend_limit_deg
    assert abs(s.theta_e_deg) == pytest.approx(PARAMS.bend_limit_deg)


def test_non_finite_command_rejected():
    s = initial_endoscope_state(PARAMS)
    with pytest.raises(InvalidCommand):
        step_endoscope(s, (float("nan"), 0.0, 0.0, 0.0), 0.01, PARAMS)
    with pytest.raises(InvalidCommand):
        step_endoscope(s, (0.0, 0.0, 0.0, 0.0), 0.0, PARAMS)


def test_fk_straight_case_exact():
    s = EndoscopeState()
    pose = endoscope_fk(s, 100.0)
    assert pose.position == (0.0, 0.0, 100.0)


def test_fk_insertion_offsets_tip():
    s = EndoscopeState(y_e_mm=40.0)
    pose = endoscope_fk(s, 100.0)
    assert pose.position == (0.0, 0.0, 140.0)


def test_fk_90_degree_bend_matches_arc_oracle():
    s = EndoscopeState(theta_e_deg=90.0)
    pose = endoscope_fk(s, 100.0)
    x, z = arc_tip_oracle(90.0, 100.0)
    assert pose.position[0] == pytest.approx(x, rel=1e-9)
    assert pose.position[1] == pytest.approx(0.0, abs=1e-9)
    assert pose.position[2] == pytest.approx(z, rel=1e-9)
    # r = 200/pi: both components equal 63.662 mm
    assert x == pytest.approx(63.6619772, abs=1e-6)


def test_fk_roll_mirrors_bend_plane():
    bent = EndoscopeState(theta_e_deg=90.0)
    rolled = EndoscopeState(theta_e_deg=90.0, gamma_e_deg=180.0)
    p0 = endoscope_fk(bent, 100.0).position
    p1 = endoscope_fk(rolled, 100.0).position
    assert p1[0] == pytest.approx(-p0[0], abs=1e-9)
    assert p1[2] == pytest.approx(p0[2], abs=1e-9)


def test_fk_phi_bends_sideways():
    s = EndoscopeState(phi_e_deg=45.0)
    pose = endoscope_fk(s, 100.0)
    assert pose.position[1] > 0.0
    assert pose.position[0] == pytest.approx(0.0, abs=1e-9)


def test_fk_continuous_at_zero_bend():
    straight = endoscope_fk(EndoscopeState(), 100.0)
    tiny = endoscope_fk(EndoscopeState(theta_e_deg=1e-8), 100.0)
    assert vec_dist(straight.position, tiny.position) < 1e-6


def test_fk_orientation_is_unit_quaternion_and_tangent():
    s = EndoscopeState(theta_e_deg=90.0)
    pose = endoscope_fk(s, 100.0)
    norm = math.sqrt(sum(c * c for c in pose.orientation))
    assert norm == pytest.approx(1.0, abs=1e-9)
    # Tip axis of a 90 degree bend toward +x points along +x.
    axis = quat_rotate(pose.orientation, (0.0, 0.0, 1.0))
    assert axis[0] == pytest.approx(1.0, abs=1e-9)
    assert axis[2] == pytest.approx(0.0, abs=1e-9)
