"""Simulation configuration: every tunable in one serializable bundle.

All defaults are engineering choices for a desk-scale run; none are
load-bearing for correctness and all can be overridden per trial. The
canonical JSON form (sorted keys) feeds the config digest stored in trace
headers, so replays can detect configuration drift.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from enum import Enum


class ControlMode(Enum):
    THREE_LIMB = "three-limb"
    HAND_CLUTCH = "clutch"


class Hand(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class RateConfig:
    """Velocity mapping parameters shared by the foot and hand master paths."""

    max_bend_rate_dps: float = 30.0
    max_trans_rate_mm_s: float = 20.0
    max_roll_rate_dps: float = 30.0
    deadband: float = 0.05
    tool_rot_rate_dps: float = 45.0
    # Travel of the hand interface used to normalize its deflections so a
    # full hand stroke reaches the same endoscope rates as a full foot stroke.
    hand_travel_mm: float = 60.0
    hand_roll_travel_deg: float = 90.0

    def validate(self):
        if min(self.max_bend_rate_dps, self.max_trans_rate_mm_s,
               self.max_roll_rate_dps, self.tool_rot_rate_dps) <= 0:
            raise ValueError("all rates must be > 0")
        if not (0.0 <= self.deadband < 1.0):
            raise ValueError("deadband must be in [0, 1)")


@dataclass(frozen=True)
class EndoscopeParams:
    """Geometry and transmission parameters of the 4-DoF scope."""

    backlash_half_width_deg: float = 22.5
    bend_limit_deg: float = 180.0
    bend_len_mm: float = 100.0
    motor_gain: float = 1.0
    travel_mm: float = 500.0


@dataclass(frozen=True)
class InstrumentParams:
    """Geometry and rate limits of one channel-mounted instrument arm."""

    seg1_len_mm: float = 25.0
    seg2_len_mm: float = 25.0
    protrusion_mm: float = 60.0
    bend_limit_deg: float = 83.0
    trans_min_mm: float = -40.0
    trans_max_mm: float = 0.0
    max_bend_rate_dps: float = 60.0
    max_trans_rate_mm_s: float = 20.0
    max_roll_rate_dps: float = 90.0
    max_grip_rate_per_s: float = 2.0
    # Channel exit offset in the scope tip frame (mm).
    channel_offset: tuple[float, float, float] = (0.0, 4.0, 0.0)


@dataclass(frozen=True)
class WorldParams:
    """Contact and grasp tolerances for the cutting task."""

    contact_tol_mm: float = 1.5
    grasp_radius_mm: float = 5.0
    lift_threshold_mm: float = 5.0
    grip_close_threshold: float = 0.8


@dataclass(frozen=True)
class ChannelConfig:
    """Simulated master-slave link: per-message delay and loss."""

    latency_ticks: int = 0
    jitter_ticks: int = 0
    drop_rate: float = 0.0
    seed: int = 0

    def validate(self):
        if self.latency_ticks < 0 or self.jitter_ticks < 0:
            raise ValueError("latency and jitter must be >= 0")
        if not (0.0 <= self.drop_rate < 1.0):
            raise ValueError("drop_rate must be in [0, 1)")


@dataclass(frozen=True)
class SimConfig:
    tick_hz: int = 100
    mode: ControlMode = ControlMode.THREE_LIMB
    clutch_hand: Hand = Hand.RIGHT
    rates: RateConfig = field(default_factory=RateConfig)
    endoscope: EndoscopeParams = field(default_factory=EndoscopeParams)
    grasper: InstrumentParams = field(default_factory=InstrumentParams)
    hook: InstrumentParams = field(
        default_factory=lambda: InstrumentParams(channel_offset=(0.0, -4.0, 0.0))
    )
    world: WorldParams = field(default_factory=WorldParams)
    channel: ChannelConfig = field(default_factory=ChannelConfig)

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_hz

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["clutch_hand"] = self.clutch_hand.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        d["mode"] = ControlMode(d["mode"])
        d["clutch_hand"] = Hand(d["clutch_hand"])
        d["rates"] = RateConfig(**d["rates"])
        d["endoscope"] = EndoscopeParams(**d["endoscope"])
        for key in ("grasper", "hook"):
            p = dict(d[key])
            p["channel_offset"] = tuple(p["channel_offset"])
            d[key] = InstrumentParams(**p)
        d["world"] = WorldParams(**d["world"])
        d["channel"] = ChannelConfig(**d["channel"])
        return cls(**d)

    def digest(self) -> str:
        """16-hex-char digest of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.blake2b(blob.encode(), digest_size=8).hexdigest()
