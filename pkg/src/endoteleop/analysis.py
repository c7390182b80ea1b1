"""Replay verification, hysteresis characterization, and trial statistics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .config import SimConfig
from .errors import InvalidSample, InvalidSweep, NotCompleted, ReplayDivergence
from .session import Session
from .slave import BacklashModel, apply_backlash
from .trace import TrialLog
from .world import EventKind, TrialResult


@dataclass(frozen=True)
class ReplayResult:
    trial: TrialResult
    final_hash: str
    ticks: int


def replay(log: TrialLog, check_digests: bool = True,
           config: SimConfig | None = None) -> ReplayResult:
    """Re-execute a recorded trial from its axes records.

    With digest checking on, every tick's state digest must match the
    recording; the first mismatch raises ReplayDivergence. Passing an
    alternative config (e.g. added channel latency) implies digests cannot
    be expected to match.
    """
    cfg = config if config is not None else log.config
    session = Session(cfg, log.scene_cfg, record=False)
    final = session.state_hash()
    for rec in log.records:
        session.tick_once(rec.axes)
        final = session.state_hash()
        if check_digests and final != rec.digest:
            raise ReplayDivergence(rec.tick, rec.digest, final)
    return ReplayResult(session.trial_result(), final, len(log.records))


def completion_time(log: TrialLog) -> float:
    """Seconds from the first endoscope motion to the fourth target cut."""
    tick_hz = log.config.tick_hz
    start = None
    cuts = []
    for rec in log.records:
        for ev in rec.events:
            if ev.kind is EventKind.ENDO_MOTION_START and start is None:
                start = rec.tick
            elif ev.kind is EventKind.TARGET_CUT:
                cuts.append(rec.tick)
    if start is None:
        raise NotCompleted("no endoscope motion recorded")
    if len(cuts) < 4:
        raise NotCompleted(f"only {len(cuts)} of 4 targets cut")
    return (cuts[3] - start) / tick_hz


@dataclass(frozen=True)
class HysteresisProfile:
    samples: tuple[tuple[float, float], ...]
    amplitude_deg: float
    cycles: int


def hysteresis_sweep(half_width_deg: float, amplitude_deg: float,
                     cycles: int = 2, step_deg: float = 1.0) -> HysteresisProfile:
    """Drive the play operator with a triangular proximal sweep of +-amplitude
    for the given number of cycles, recording (proximal, distal) samples."""
    if amplitude_deg <= 0 or step_deg <= 0 or cycles < 1:
        raise InvalidSweep("amplitude, step and cycles must be positive")
    model = BacklashModel(half_width_deg)
    samples = []

    def ramp(frm: float, to: float):
        nonlocal model
        n = max(1, round(abs(to - frm) / step_deg))
        for i in range(1, n + 1):
            x = frm + (to - frm) * i / n
            model, out = apply_backlash(model, x)
            samples.append((x, out))

    model, out = apply_backlash(model, 0.0)
    samples.append((0.0, out))
    ramp(0.0, amplitude_deg)
    for _ in range(cycles):
        ramp(amplitude_deg, -amplitude_deg)
        ramp(-amplitude_deg, amplitude_deg)
    return HysteresisProfile(tuple(samples), amplitude_deg, cycles)


def dead_zone_width(profile: HysteresisProfile) -> float:
    """Proximal-angle span over which the distal output stays stationary
    after each sweep reversal, averaged over all reversals. Equals twice the
    play half-width when the sweep amplitude exceeds the half-width."""
    s = profile.samples
    if len(s) < 3:
        raise InvalidSweep("profile too short")
    spans = []
    # Reversal points: where the proximal increment changes sign.
    prev_dir = 0.0
    for k in range(1, len(s)):
        d = s[k][0] - s[k - 1][0]
        direction = math.copysign(1.0, d) if d != 0 else prev_dir
        if prev_dir != 0.0 and direction != prev_dir:
            # Span from the reversal to the last sample at which the distal
            # output has still not moved.
            start_prox = s[k - 1][0]
            start_dist = s[k - 1][1]
            j = k
            while j < len(s) and s[j][1] == start_dist:
                j += 1
            if j < len(s):
                spans.append(abs(s[j - 1][0] - start_prox))
        prev_dir = direction
    if not spans:
        raise InvalidSweep("no distal motion after any reversal; amplitude too small")
    return sum(spans) / len(spans)


def profile_to_csv(profile: HysteresisProfile) -> str:
    lines = ["proximal_deg,distal_deg"]
    lines += [f"{p!r},{d!r}" for p, d in profile.samples]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class StatsResult:
    U: float
    p_two_sided: float
    n: int
    m: int
    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    method: str


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # Tied block gets the mean of the ranks it spans.
        r = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def _mean_sd(x) -> tuple[float, float]:
    n = len(x)
    mean = sum(x) / n
    sd = math.sqrt(sum((v - mean) ** 2 for v in x) / (n - 1)) if n > 1 else 0.0
    return mean, sd

# Exact enumeration is used up to this combined sample size (C(14,7) = 3432
# group assignments at worst).
EXACT_ENUMERATION_MAX_N = 14


def mann_whitney_u(a, b) -> StatsResult:
    """Two-sided Mann-Whitney U test with midrank tie handling.

    U counts, over all cross pairs, the a-values exceeding b-values (ties
    half). For small samples (n + m <= 14) the two-sided p-value is exact,
    from enumeration of all group assignments of the pooled values;
    otherwise it uses the normal approximation with tie correction. Either
    way p = min(1, 2 * min(P(U <= u), P(U >= u))).
    """
    a, b = list(map(float, a)), list(map(float, b))
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise InvalidSample("both samples must be non-empty")

    def u_stat(x_ranks, nx) -> float:
        return sum(x_ranks) - nx * (nx + 1) / 2.0

    pooled = a + b
    ranks = _midranks(pooled)
    u = u_stat(ranks[:n], n)

    if n + m <= EXACT_ENUMERATION_MAX_N:
        lo = hi = total = 0
        for combo in itertools.combinations(range(n + m), n):
            u_perm = sum(ranks[i] for i in combo) - n * (n + 1) / 2.0
            total += 1
            if u_perm <= u + 1e-12:
                lo += 1
            if u_perm >= u - 1e-12:
                hi += 1
        p = min(1.0, 2.0 * min(lo, hi) / total)
        method = "exact"
    else:
        mu = n * m / 2.0
        big_n = n + m
        tie_sum = 0.0
        for _, group in itertools.groupby(sorted(pooled)):
            t = len(list(group))
            tie_sum += t ** 3 - t
        var = n * m / 12.0 * ((big_n + 1) - tie_sum / (big_n * (big_n - 1)))
        if var <= 0.0:
            p = 1.0
        else:
            z = (u - mu) / math.sqrt(var)
            tail = 0.5 * math.erfc(abs(z) / math.sqrt(2.0))
            p = min(1.0, 2.0 * tail)
        method = "normal"

    mean_a, sd_a = _mean_sd(a)
    mean_b, sd_b = _mean_sd(b)
    return StatsResult(U=u, p_two_sided=p, n=n, m=m,
                       mean_a=mean_a, sd_a=sd_a, mean_b=mean_b, sd_b=sd_b,
                       method=method)


@dataclass(frozen=True)
class SummaryResult:
    """Group summaries for two sets of completion times (a = candidate
    scheme, b = reference scheme) plus every reasonable aggregation of the
    relative time reduction, since they genuinely differ."""

    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    pooled_reduction_pct: float
    subject_reductions_pct: tuple[float, ...] | None
    mean_subject_reduction_pct: float | None

    def to_dict(self) -> dict:
        return {
            "mean_a": self.mean_a, "sd_a": self.sd_a,
            "mean_b": self.mean_b, "sd_b": self.sd_b,
            "pooled_reduction_pct": self.pooled_reduction_pct,
            "subject_reductions_pct":
                None if self.subject_reductions_pct is None
                else list(self.subject_reductions_pct),
            "mean_subject_reduction_pct": self.mean_subject_reduction_pct,
        }


def summarize(times_a, times_b, subject_pairs=None) -> SummaryResult:
    """Mean +- sample standard deviation per group and percent reduction of
    a relative to b: pooled from the group means, and per subject when
    paired per-subject means are given as (a_mean, b_mean) tuples."""
    if len(times_a) == 0 or len(times_b) == 0:
        raise InvalidSample("both groups need at least one time")
    mean_a, sd_a = _mean_sd(list(map(float, times_a)))
    mean_b, sd_b = _mean_sd(list(map(float, times_b)))
    pooled = (mean_b - mean_a) / mean_b * 100.0
    reductions = None
    mean_reduction = None
    if subject_pairs is not None:
        reductions = tuple((bb - aa) / bb * 100.0 for aa, bb in subject_pairs)
        mean_reduction = sum(reductions) / len(reductions)
    return SummaryResult(mean_a, sd_a, mean_b, sd_b, pooled, reductions, mean_reduction)
