"""Deterministic desk-scale simulator of a three-limb teleoperated flexible
endoscopic surgery system: slave kinematics with cable backlash, foot/hand
master mappings with a clutch-based alternative, a lossy master-slave
channel, the four-target cutting task, and an analysis pipeline."""

from .config import (
    ChannelConfig,
    ControlMode,
    EndoscopeParams,
    Hand,
    InstrumentParams,
    RateConfig,
    SimConfig,
    WorldParams,
)
from .session import Session
from .slave import (
    BacklashModel,
    EndoscopeState,
    InstrumentArmState,
    InstrumentKind,
    InstrumentTarget,
    MarkerChain,
    apply_backlash,
    endoscope_fk,
    estimate_bend_from_markers,
    instrument_fk,
    step_endoscope,
    step_instrument,
)
from .world import Scene, Target, TrialResult, load_scene

__version__ = "0.1.0"

__all__ = [
    "BacklashModel", "ChannelConfig", "ControlMode", "EndoscopeParams",
    "EndoscopeState", "Hand", "InstrumentArmState", "InstrumentKind",
    "InstrumentParams", "InstrumentTarget", "MarkerChain", "RateConfig",
    "Scene", "Session", "SimConfig", "Target", "TrialResult", "WorldParams",
    "apply_backlash", "endoscope_fk", "estimate_bend_from_markers",
    "instrument_fk", "load_scene", "step_endoscope", "step_instrument",
]


def default_scene_cfg() -> dict:
    """The bundled default scene as a config dict."""
    import json
    from importlib import resources

    text = resources.files(__name__).joinpath("scenes/default.scene").read_text()
    return json.loads(text)
