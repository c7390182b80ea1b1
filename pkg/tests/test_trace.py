import dataclasses
import json
import random

import pytest

from endoteleop.analysis import completion_time, replay
from endoteleop.config import ChannelConfig, SimConfig
from endoteleop.errors import NotCompleted, ReplayDivergence
from endoteleop.session import ZERO_AXES, Session
from endoteleop.trace import log_from_session, read_trace, write_trace


def run_short_session(scene_cfg, ticks=120, seed=0):
    cfg = SimConfig(channel=ChannelConfig(jitter_ticks=2, drop_rate=0.05, seed=seed))
    s = Session(cfg, scene_cfg)
    rng = random.Random(1)
    for _ in range(ticks):
        axes = [rng.uniform(-0.7, 0.7) for _ in range(19)]
        axes[9] = axes[10] = axes[16] = axes[17] = axes[18] = 0.0
        s.tick_once(axes)
    return s


def test_trace_file_round_trip(scene_cfg, tmp_path):
    s = run_short_session(scene_cfg)
    log = log_from_session(s)
    path = tmp_path / "t.trace"
    write_trace(log, path)
    back = read_trace(path)
    assert back.header == json.loads(json.dumps(log.header))
    assert back.records == log.records


def test_replay_of_fresh_recording_never_diverges(scene_cfg, tmp_path):
    s = run_short_session(scene_cfg)
    log = log_from_session(s)
    path = tmp_path / "t.trace"
    write_trace(log, path)
    res = replay(read_trace(path))
    assert res.final_hash == log.records[-1].digest
    assert res.ticks == len(log.records)


def test_replay_detects_tampered_digest(scene_cfg, tmp_path):
    s = run_short_session(scene_cfg)
    log = log_from_session(s)
    bad = log.records[60]
    log.records[60] = dataclasses.replace(bad, digest="0" * 16)
    with pytest.raises(ReplayDivergence) as exc:
        replay(log)
    assert exc.value.tick == 60


def test_replay_with_altered_seed_diverges_at_first_random_tick(scene_cfg):
    s = run_short_session(scene_cfg, seed=10)
    log = log_from_session(s)
    log.header["config"]["channel"]["seed"] = 11
    with pytest.raises(ReplayDivergence):
        replay(log)


def test_truncated_trace_replays_cleanly(scene_cfg, tmp_path):
    s = run_short_session(scene_cfg)
    write_trace(log_from_session(s), tmp_path / "t.trace")
    lines = (tmp_path / "t.trace").read_text().splitlines()
    (tmp_path / "cut.trace").write_text("\n".join(lines[:51]) + "\n")
    res = replay(read_trace(tmp_path / "cut.trace"))
    assert res.ticks == 50


def test_completion_time_requires_motion_and_cuts(scene_cfg):
    cfg = SimConfig()
    s = Session(cfg, scene_cfg)
    for _ in range(20):
        s.tick_once(ZERO_AXES)
    with pytest.raises(NotCompleted):
        completion_time(log_from_session(s))


def test_completion_time_of_golden_matches_result(golden_three_limb):
    log = read_trace(golden_three_limb)
    t = completion_time(log)
    res = replay(log)
    assert t == pytest.approx(res.trial.completion_time_s)
