"""Command-line front end.

Subcommands: simulate (run a scripted policy or re-run a trace's axes,
writing a fresh trace), replay (verify a trace tick-by-tick), hysteresis
(characterize the bend transmission dead zone), stats (Mann-Whitney U and
group summaries over times files), serve (socket bridge for the operator
console). Exit codes: 0 success, 1 usage error, 2 task failure or replay
divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import analysis, default_scene_cfg
from .config import ChannelConfig, ControlMode, RateConfig, SimConfig
from .errors import EndoteleopError, ReplayDivergence
from .policies import make_policy, run_policy
from .session import Session
from .trace import log_from_session, read_trace, write_trace

SCENE_DIR_ENV = "ENDOTELEOP_SCENE_DIR"

_MODE_FLAG = {"three-limb": ControlMode.THREE_LIMB, "clutch": ControlMode.HAND_CLUTCH}


class _Parser(argparse.ArgumentParser):
    # Usage problems exit 1; argparse's default of 2 is reserved for task failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="channel RNG seed")
    p.add_argument("--scene", default="default",
                   help=f"scene file path or name (searched in ${SCENE_DIR_ENV}, then bundled)")
    p.add_argument("--mode", choices=sorted(_MODE_FLAG), default="three-limb")
    p.add_argument("--latency", type=int, default=0, help="channel latency in ticks")
    p.add_argument("--jitter", type=int, default=0, help="channel jitter in ticks")
    p.add_argument("--drop", type=float, default=0.0, help="channel drop probability")
    p.add_argument("--max-bend-rate", type=float, default=None, help="deg/s")
    p.add_argument("--max-trans-rate", type=float, default=None, help="mm/s")
    p.add_argument("--max-roll-rate", type=float, default=None, help="deg/s")
    p.add_argument("--deadband", type=float, default=None)
    p.add_argument("--show-config", action="store_true",
                   help="print the effective configuration as JSON and exit")


def _config_from_args(args) -> SimConfig:
    rates = RateConfig()
    overrides = {}
    if args.max_bend_rate is not None:
        overrides["max_bend_rate_dps"] = args.max_bend_rate
    if args.max_trans_rate is not None:
        overrides["max_trans_rate_mm_s"] = args.max_trans_rate
    if args.max_roll_rate is not None:
        overrides["max_roll_rate_dps"] = args.max_roll_rate
    if args.deadband is not None:
        overrides["deadband"] = args.deadband
    if overrides:
        rates = dataclasses.replace(rates, **overrides)
    return SimConfig(
        mode=_MODE_FLAG[args.mode],
        rates=rates,
        channel=ChannelConfig(latency_ticks=args.latency, jitter_ticks=args.jitter,
                              drop_rate=args.drop, seed=args.seed),
    )


def _load_scene_cfg(name: str) -> dict:
    path = Path(name)
    if not path.exists():
        candidates = []
        env_dir = os.environ.get(SCENE_DIR_ENV)
        if env_dir:
            candidates.append(Path(env_dir) / f"{name}.scene")
        for c in candidates:
            if c.exists():
                path = c
                break
        else:
            if name == "default":
                return default_scene_cfg()
            raise EndoteleopError(f"scene {name!r} not found")
    return json.loads(path.read_text())


def _maybe_show_config(args) -> bool:
    if getattr(args, "show_config", False):
        cfg = _config_from_args(args)
        out = cfg.to_dict()
        out["config_digest"] = cfg.digest()
        out["scene"] = args.scene
        print(json.dumps(out, indent=2, sort_keys=True))
        return True
    return False


def _cmd_simulate(args) -> int:
    if _maybe_show_config(args):
        return 0
    cfg = _config_from_args(args)
    scene_cfg = _load_scene_cfg(args.scene)
    session = Session(cfg, scene_cfg)
    if args.axes_from:
        log_in = read_trace(args.axes_from)
        for rec in log_in.records:
            session.tick_once(rec.axes)
        result = session.trial_result()
    else:
        result = run_policy(session, make_policy(args.policy, session),
                            max_ticks=args.max_ticks)
    if args.out:
        write_trace(log_from_session(session), args.out)
    print(json.dumps(result.to_dict() | {"final_hash": session.state_hash(),
                                         "ticks": session.tick}))
    return 0 if result.completed or args.policy == "idle" else 2


def _cmd_replay(args) -> int:
    if _maybe_show_config(args):
        return 0
    log = read_trace(args.trace)
    override = None
    if args.latency or args.jitter or args.drop:
        override = dataclasses.replace(
            log.config,
            channel=ChannelConfig(latency_ticks=args.latency, jitter_ticks=args.jitter,
                                  drop_rate=args.drop, seed=args.seed),
        )
    try:
        res = analysis.replay(log, check_digests=override is None, config=override)
    except ReplayDivergence as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(res.trial.to_dict() | {"final_hash": res.final_hash,
                                            "ticks": res.ticks}))
    return 0 if res.trial.completed else 2


def _cmd_hysteresis(args) -> int:
    profile = analysis.hysteresis_sweep(args.half_width, args.amplitude,
                                        cycles=args.cycles, step_deg=args.step)
    width = analysis.dead_zone_width(profile)
    if args.csv:
        Path(args.csv).write_text(analysis.profile_to_csv(profile))
    print(json.dumps({
        "half_width_deg": args.half_width,
        "amplitude_deg": args.amplitude,
        "cycles": args.cycles,
        "dead_zone_deg": width,
        "samples": len(profile.samples),
    }))
    return 0


def _read_times(path: str) -> list[float]:
    return [float(line) for line in Path(path).read_text().split() if line.strip()]


def _cmd_stats(args) -> int:
    a = _read_times(args.times_a)
    b = _read_times(args.times_b)
    res = analysis.mann_whitney_u(a, b)
    pairs = None
    if args.pairs:
        pairs = [tuple(map(float, line.split(",")))
                 for line in Path(args.pairs).read_text().splitlines() if line.strip()]
    summary = analysis.summarize(a, b, subject_pairs=pairs)
    print(json.dumps({
        "U": res.U, "p_two_sided": res.p_two_sided, "n": res.n, "m": res.m,
        "method": res.method,
    } | summary.to_dict()))
    if args.csv:
        rows = ["metric,value",
                f"U,{res.U!r}", f"p_two_sided,{res.p_two_sided!r}",
                f"mean_a,{summary.mean_a!r}", f"sd_a,{summary.sd_a!r}",
                f"mean_b,{summary.mean_b!r}", f"sd_b,{summary.sd_b!r}",
                f"pooled_reduction_pct,{summary.pooled_reduction_pct!r}"]
        if summary.subject_reductions_pct is not None:
            rows += [f"subject_{i}_reduction_pct,{r!r}"
                     for i, r in enumerate(summary.subject_reductions_pct)]
            rows.append(f"mean_subject_reduction_pct,{summary.mean_subject_reduction_pct!r}")
        Path(args.csv).write_text("\n".join(rows) + "\n")
    return 0


def _cmd_serve(args) -> int:
    if _maybe_show_config(args):
        return 0
    from .server import serve

    cfg = _config_from_args(args)
    scene_cfg = _load_scene_cfg(args.scene)
    serve(cfg, scene_cfg, port=args.port, ws_port=args.ws_port,
          lockstep=args.lockstep, max_ticks=args.max_ticks)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="endoteleop",
                     description="three-limb endoscopic teleoperation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[], help="run a scripted policy or trace axes")
    _add_config_flags(p)
    p.add_argument("--policy", default="task", help="scripted policy: task or idle")
    p.add_argument("--axes-from", default=None, metavar="TRACE",
                   help="re-run the axes of an existing trace instead of a policy")
    p.add_argument("--out", default=None, help="write the resulting trace here")
    p.add_argument("--max-ticks", type=int, default=60000)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("replay", help="re-execute a trace and verify digests")
    _add_config_flags(p)
    p.add_argument("trace")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("hysteresis", help="sweep the bend transmission and measure the dead zone")
    p.add_argument("--half-width", type=float, default=22.5, help="play half-width (deg)")
    p.add_argument("--amplitude", type=float, default=60.0, help="sweep amplitude (deg)")
    p.add_argument("--cycles", type=int, default=2)
    p.add_argument("--step", type=float, default=1.0, help="sweep step (deg)")
    p.add_argument("--csv", default=None, help="write the profile as CSV here")
    p.set_defaults(func=_cmd_hysteresis)

    p = sub.add_parser("stats", help="Mann-Whitney U and summaries over two times files")
    p.add_argument("times_a")
    p.add_argument("times_b")
    p.add_argument("--pairs", default=None,
                   help="CSV of per-subject mean pairs 'a,b' for per-subject reductions")
    p.add_argument("--csv", default=None, help="also write the summary as CSV here")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("serve", help="run a live session behind the UI socket bridge")
    _add_config_flags(p)
    p.add_argument("--port", type=int, default=7348, help="TCP bridge port")
    p.add_argument("--ws-port", type=int, default=None,
                   help="also serve WebSocket clients on this port")
    p.add_argument("--lockstep", action="store_true",
                   help="advance one tick per received axes record instead of wall clock")
    p.add_argument("--max-ticks", type=int, default=0, help="stop after N ticks (0 = run forever)")
    p.set_defaults(func=_cmd_serve)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except EndoteleopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
