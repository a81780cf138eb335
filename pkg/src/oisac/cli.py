"""Command-line entry point: ``oisac <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .channel import TABLE_ANGLE, TABLE_DISTANCE, plr_angle, plr_distance
from .scc import DecodeFailure, DetectionFailure, FrameRaster, VelocityPayload, decode_frame, render_frame
from .sim.config import EKF, IDEAL, OISAC, PRESETS, RASTER, ConfigError, ScenarioConfig
from .sim.engine import run
from .sim.experiments import BRAKE_LEVELS, braking_csv, braking_experiment, lyapunov_check
from .sim.output import emit, metrics_text


def _scenario(args) -> ScenarioConfig:
    if args.config:
        cfg = ScenarioConfig.load(args.config)
    elif args.preset == "braking":
        cfg = PRESETS["braking"](args.v_level)
    else:
        cfg = PRESETS[args.preset]()
    overrides = {}
    for key in ("estimator", "sensing", "seed", "duration"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    if overrides:
        cfg = ScenarioConfig.from_dict({**cfg.to_dict(), **overrides})
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = _scenario(args)
    records, metrics = run(cfg)
    if args.out:
        out = Path(args.out)
        emit(records, metrics, out, plots=not args.no_plots)
        (out / "config.json").write_text(cfg.to_json() + "\n")
    sys.stdout.write(metrics_text(metrics))
    return 1 if metrics.visibility_lost else 0


def cmd_braking_sweep(args) -> int:
    rows = braking_experiment(args.levels, args.reps, workers=args.workers)
    text = braking_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_codec(args) -> int:
    if args.action == "encode":
        payload = VelocityPayload(args.code_v, args.code_omega, args.seq, args.timestamp)
        render_frame(payload).save_pgm(args.path)
        return 0
    if args.action == "roundtrip":
        expected = VelocityPayload(args.code_v, args.code_omega, args.seq, args.timestamp)
        render_frame(expected).save_pgm(args.path)
    raster = FrameRaster.load_pgm(args.path)
    try:
        got = decode_frame(raster)
    except (DetectionFailure, DecodeFailure) as exc:
        print(f"decode failed: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"code_v": got.code_v, "code_omega": got.code_omega, "seq": got.seq, "timestamp_ms": got.timestamp_ms}))
    if args.action == "roundtrip" and got != expected:
        print("roundtrip mismatch", file=sys.stderr)
        return 1
    return 0


def cmd_dump_tables(args) -> int:
    lines = ["curve,abscissa,table,fitted"]
    for d, p in TABLE_DISTANCE:
        lines.append(f"distance_cm,{d},{p},{plr_distance(d / 100.0):.6g}")
    for a, p in TABLE_ANGLE:
        lines.append(f"angle_deg,{a},{p},{plr_angle(np.radians(a)):.6g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_lyapunov_check(args) -> int:
    n_pass, failures = lyapunov_check(args.samples, seed=args.seed)
    for f in failures[: args.show]:
        print(json.dumps(f))
    frac = n_pass / args.samples
    print(f"{n_pass}/{args.samples} samples satisfy the bound ({100 * frac:.1f}%)")
    return 0 if frac >= 0.99 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oisac", description="Leader-follower formation with screen-camera sensing and communication.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("--preset", choices=sorted(PRESETS), default="circular")
    r.add_argument("--config", help="scenario JSON (overrides --preset)")
    r.add_argument("--estimator", choices=[OISAC, EKF])
    r.add_argument("--sensing", choices=[IDEAL, RASTER])
    r.add_argument("--seed", type=int)
    r.add_argument("--duration", type=float)
    r.add_argument("--v-level", type=float, default=0.3, help="cruise speed for the braking preset")
    r.add_argument("--out", help="directory for records.csv, metrics.txt, SVG plots")
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("braking-sweep", help="braking distance per speed level and estimator")
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--levels", type=float, nargs="+", default=list(BRAKE_LEVELS))
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_braking_sweep)

    c = sub.add_parser("codec", help="encode or decode a frame as PGM")
    c.add_argument("action", choices=["encode", "decode", "roundtrip"])
    c.add_argument("path")
    c.add_argument("--code-v", type=int, default=0)
    c.add_argument("--code-omega", type=int, default=128)
    c.add_argument("--seq", type=int, default=0)
    c.add_argument("--timestamp", type=int, default=0)
    c.set_defaults(func=cmd_codec)

    t = sub.add_parser("dump-tables", help="loss tables and the fitted curves as CSV")
    t.add_argument("--out")
    t.set_defaults(func=cmd_dump_tables)

    ly = sub.add_parser("lyapunov-check", help="sampled check of the gain floor")
    ly.add_argument("--samples", type=int, default=1000)
    ly.add_argument("--seed", type=int, default=0)
    ly.add_argument("--show", type=int, default=5, help="failures to print")
    ly.set_defaults(func=cmd_lyapunov_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"oisac: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
