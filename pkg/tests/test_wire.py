import random

import pytest
from hypothesis import given, strategies as st

from endoteleop.config import ControlMode
from endoteleop.errors import CodecError
from endoteleop.geometry import TipPose, quat_normalize
from endoteleop.slave import (
    BacklashModel,
    EndoscopeState,
    InstrumentArmState,
    InstrumentKind,
    InstrumentTarget,
)
from endoteleop.wire import (
    MasterCommand,
    SlaveStateMsg,
    decode,
    decode_axes,
    encode,
    encode_axes,
)
from endoteleop.world import Event, EventKind

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def zero_command():
    return MasterCommand(
        tick=0, seq=0, mode=ControlMode.THREE_LIMB,
        endo_vel=(0.0, 0.0, 0.0, 0.0),
        left_target=InstrumentTarget(grip=0.0),
        right_target=InstrumentTarget(),
        cautery=False,
    )


def random_command(rng):
    f = lambda: rng.uniform(-1e6, 1e6)
    return MasterCommand(
        tick=rng.randrange(2**40), seq=rng.randrange(2**40),
        mode=rng.choice([ControlMode.THREE_LIMB, ControlMode.HAND_CLUTCH]),
        endo_vel=(f(), f(), f(), f()),
        left_target=InstrumentTarget(f(), f(), f(), f(), rng.random()),
        right_target=InstrumentTarget(f(), f(), f(), f(), None),
        cautery=rng.random() < 0.5,
    )


def random_state_msg(rng):
    f = lambda: rng.uniform(-1e4, 1e4)
    endo = EndoscopeState(
        ud_motor_deg=f(), lr_motor_deg=f(), theta_e_deg=f(), phi_e_deg=f(),
        y_e_mm=rng.uniform(0, 500), gamma_e_deg=rng.uniform(0, 360),
        backlash_ud=BacklashModel(rng.uniform(0, 45), f()),
        backlash_lr=BacklashModel(rng.uniform(0, 45), f()),
    )
    arms = (
        InstrumentArmState(kind=InstrumentKind.GRASPER, bend1_deg=83.0, bend2_deg=-83.0,
                           trans_mm=-40.0, roll_deg=f(), grip=rng.random()),
        InstrumentArmState(kind=InstrumentKind.HOOK, bend1_deg=f(), bend2_deg=f(),
                           trans_mm=rng.uniform(-40, 0), roll_deg=f(), grip=None),
    )
    poses = tuple(
        TipPose((f(), f(), f()), quat_normalize((1.0, rng.random(), rng.random(), rng.random())))
        for _ in range(3)
    )
    events = tuple(
        Event(rng.choice(list(EventKind)), rng.randrange(-1, 4))
        for _ in range(rng.randrange(0, 4))
    )
    return SlaveStateMsg(tick=rng.randrange(2**40), endoscope=endo, arms=arms,
                         tip_poses=poses, events=events)


def test_zero_command_round_trips_bit_exact():
    msg = zero_command()
    data = encode(msg)
    assert decode(data) == msg
    assert encode(decode(data)) == data


def test_extreme_state_round_trips():
    rng = random.Random(0)
    msg = random_state_msg(rng)
    data = encode(msg)
    assert decode(data) == msg
    assert encode(decode(data)) == data


def test_corrupt_magic_reports_offset_zero():
    data = bytearray(encode(zero_command()))
    data[0] ^= 0xFF
    with pytest.raises(CodecError) as exc:
        decode(bytes(data))
    assert exc.value.offset == 0


def test_bad_version_reports_offset_four():
    data = bytearray(encode(zero_command()))
    data[4] = 0x7F
    with pytest.raises(CodecError) as exc:
        decode(bytes(data))
    assert exc.value.offset == 4


def test_unknown_type_reports_offset_five():
    data = bytearray(encode(zero_command()))
    data[5] = 0x77
    with pytest.raises(CodecError) as exc:
        decode(bytes(data))
    assert exc.value.offset == 5


def test_truncation_detected():
    data = encode(zero_command())
    for cut in (0, 3, 5, 20, len(data) - 1):
        with pytest.raises(CodecError):
            decode(data[:cut])


def test_truncated_event_section_detected():
    msg = random_state_msg(random.Random(1))
    if not msg.events:
        msg = SlaveStateMsg(msg.tick, msg.endoscope, msg.arms, msg.tip_poses,
                            (Event(EventKind.MISS_CUT, -1),))
    data = encode(msg)
    with pytest.raises(CodecError):
        decode(data[:-1])


def test_axes_record_round_trip():
    axes = tuple(float(i) / 7.0 for i in range(19))
    assert decode_axes(encode_axes(axes)) == axes
    with pytest.raises(ValueError):
        encode_axes([0.0] * 18)


def test_seeded_fuzz_round_trip_10k():
    rng = random.Random(0xE70)
    for i in range(10_000):
        msg = random_command(rng) if i % 2 == 0 else random_state_msg(rng)
        data = encode(msg)
        back = decode(data)
        assert back == msg
        assert encode(back) == data


@given(st.data())
def test_command_round_trip_property(data):
    vel = tuple(data.draw(finite) for _ in range(4))
    lt = InstrumentTarget(data.draw(finite), data.draw(finite), data.draw(finite),
                          data.draw(finite), data.draw(st.one_of(st.none(), finite)))
    rt = InstrumentTarget(data.draw(finite), data.draw(finite), data.draw(finite),
                          data.draw(finite), None)
    msg = MasterCommand(
        tick=data.draw(st.integers(0, 2**63 - 1)),
        seq=data.draw(st.integers(0, 2**63 - 1)),
        mode=data.draw(st.sampled_from(list(ControlMode))),
        endo_vel=vel, left_target=lt, right_target=rt,
        cautery=data.draw(st.booleans()),
    )
    assert decode(encode(msg)) == msg
