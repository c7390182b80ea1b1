"""Trial trace files: one JSON header line, then one JSON line per tick.

A line holds everything needed to re-execute and verify the tick: the raw
axes record, the command sequence number the slave held after delivery, the
post-tick state digest, and any task events. Python's JSON float encoding is
shortest-round-trip, so axes survive the file bit-exactly. The format is
append-only: a crash truncates cleanly at a line boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .config import SimConfig
from .session import Session, TickRecord
from .world import Event

TRACE_VERSION = 1


@dataclass
class TrialLog:
    header: dict
    records: list[TickRecord]

    @property
    def config(self) -> SimConfig:
        return SimConfig.from_dict(self.header["config"])

    @property
    def scene_cfg(self) -> dict:
        return self.header["scene"]


def make_header(config: SimConfig, scene_cfg: dict) -> dict:
    return {
        "trace_version": TRACE_VERSION,
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "scene": scene_cfg,
    }


def log_from_session(session: Session) -> TrialLog:
    if session.records is None:
        raise ValueError("session was created with record=False")
    return TrialLog(make_header(session.config, session.scene_cfg), session.records)


def write_trace(log: TrialLog, path: str | Path):
    with open(path, "w") as f:
        f.write(json.dumps(log.header, sort_keys=True) + "\n")
        for r in log.records:
            line = [r.tick, list(r.axes), r.held_seq, r.digest,
                    [e.to_json() for e in r.events]]
            f.write(json.dumps(line) + "\n")


def read_trace(path: str | Path) -> TrialLog:
    records = []
    with open(path) as f:
        header = json.loads(f.readline())
        if header.get("trace_version") != TRACE_VERSION:
            raise ValueError(f"unsupported trace version {header.get('trace_version')}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            tick, axes, held_seq, digest, events = json.loads(line)
            records.append(TickRecord(
                tick=tick,
                axes=tuple(axes),
                held_seq=held_seq,
                digest=digest,
                events=tuple(Event.from_json(e) for e in events),
            ))
    return TrialLog(header, records)
