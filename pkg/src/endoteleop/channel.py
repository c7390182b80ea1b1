"""Simulated lossy FIFO link carrying encoded frames between master and slave.

Each sent frame is dropped with the configured probability, otherwise
scheduled latency + uniform jitter ticks ahead, never earlier than the
previously scheduled frame (a serial link cannot reorder). All randomness
comes from the channel's own seeded generator, so identical seeds and send
sequences give identical delivery schedules.
"""

from __future__ import annotations

import random
import struct
from collections import deque

from .config import ChannelConfig


class Channel:
    def __init__(self, cfg: ChannelConfig):
        cfg.validate()
        self.cfg = cfg
        self._rng = random.Random(cfg.seed)
        self._draws = 0
        self._queue: deque[tuple[int, bytes]] = deque()
        self._last_scheduled = -1
        self.sent = 0
        self.dropped = 0

    def send(self, frame: bytes, now_tick: int):
        self.sent += 1
        if self.cfg.drop_rate > 0.0:
            self._draws += 1
            if self._rng.random() < self.cfg.drop_rate:
                self.dropped += 1
                return
        delay = self.cfg.latency_ticks
        if self.cfg.jitter_ticks > 0:
            self._draws += 1
            delay += self._rng.randint(0, self.cfg.jitter_ticks)
        delivery = max(now_tick + delay, self._last_scheduled)
        self._last_scheduled = delivery
        self._queue.append((delivery, frame))

    def poll(self, now_tick: int) -> list[bytes]:
        out = []
        while self._queue and self._queue[0][0] <= now_tick:
            out.append(self._queue.popleft()[1])
        return out

    def pending(self) -> int:
        return len(self._queue)

    def fingerprint(self) -> bytes:
        """Canonical bytes covering everything that affects future behavior."""
        parts = [struct.pack("<qqq", self.cfg.seed, self._draws, len(self._queue))]
        for delivery, frame in self._queue:
            parts.append(struct.pack("<qI", delivery, len(frame)))
            parts.append(frame)
        return b"".join(parts)
