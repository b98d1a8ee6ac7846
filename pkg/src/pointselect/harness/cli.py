"""Command-line interface.

Exit codes: 0 ok, 1 verification failure, 2 usage error (argparse),
3 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from ..events import read_log, write_log
from ..metrics import build_report, render_table, report_to_doc
from ..vehicle import SpeedPolicy
from ..world import build_scenario, scenario_to_doc
from .config import C1, C2, PointerParams, SessionConfig, load_config_file
from .engine import AbortedSessionError
from .run import replay, run_session

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _config_from_args(args) -> SessionConfig:
    if args.config:
        cfg = load_config_file(args.config)
    else:
        cfg = SessionConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
        if cfg.scenario_seed is None:
            updates["scenario_seed"] = None  # keep following the master seed
    if args.speed is not None:
        updates["speed"] = SpeedPolicy(
            target_kmh=float(args.speed), tolerance_kmh=cfg.speed.tolerance_kmh
        )
    if args.condition is not None:
        updates["condition"] = args.condition
    if args.noise_deg is not None:
        updates["pointer"] = dataclasses.replace(cfg.pointer, noise_deg=args.noise_deg)
    if args.duration is not None:
        updates["duration_s"] = args.duration
    cfg = dataclasses.replace(cfg, **updates)
    cfg.validate()
    return cfg


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="session config JSON file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--speed", type=int, choices=(30, 50, 70), help="target speed km/h")
    p.add_argument("--condition", choices=(C1, C2), help="driving only or with input task")
    p.add_argument("--noise-deg", type=float, help="pointer noise sigma per axis, degrees")
    p.add_argument("--duration", type=float, help="session duration, seconds")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pointselect",
        description="Deterministic point-and-select driving simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a headless session with synthetic agents")
    _add_run_args(p_run)
    p_run.add_argument("--out", type=Path, default=Path("log.jsonl"), help="output log path")

    p_replay = sub.add_parser("replay", help="re-simulate a log from its recorded inputs")
    p_replay.add_argument("log", type=Path)
    p_replay.add_argument("--verify", action="store_true", help="exit 1 unless hash-equal")

    p_report = sub.add_parser("report", help="compute metrics from a log")
    p_report.add_argument("log", type=Path)
    p_report.add_argument("--format", choices=("json", "table"), default="table")
    p_report.add_argument("--out", type=Path, help="also write report JSON here")

    p_gen = sub.add_parser("gen-scenario", help="generate a scenario document")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", type=Path, default=Path("scenario.json"))

    p_serve = sub.add_parser("serve", help="serve live sessions over WebSocket")
    _add_run_args(p_serve)
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument(
        "--log-dir", type=Path, default=Path("."), help="directory for session logs"
    )

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config_from_args(args)
            try:
                log = run_session(cfg)
            except AbortedSessionError as e:
                write_log(e.log, args.out)
                print(f"session aborted: {e} (partial log at {args.out})", file=sys.stderr)
                return EXIT_RUNTIME
            write_log(log, args.out)
            print(f"wrote {len(log.records)} records to {args.out} (hash {log.final_hash})")
            return EXIT_OK

        if args.command == "replay":
            log = read_log(args.log)
            result = replay(log)
            if result.verified:
                print(f"verified: hash {result.actual_hash}")
                return EXIT_OK
            print(
                f"divergence at record {result.first_divergent_record} "
                f"(tick {result.first_divergent_tick}): expected hash "
                f"{result.expected_hash}, got {result.actual_hash}",
                file=sys.stderr,
            )
            return EXIT_VERIFY_FAILED if args.verify else EXIT_VERIFY_FAILED

        if args.command == "report":
            log = read_log(args.log)
            report = build_report(log)
            if args.out:
                args.out.write_text(
                    json.dumps(report_to_doc(report), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8",
                )
            if args.format == "json":
                print(json.dumps(report_to_doc(report), indent=2, sort_keys=True))
            else:
                print(render_table(report))
            return EXIT_OK

        if args.command == "gen-scenario":
            scenario = build_scenario(args.seed)
            args.out.write_text(
                json.dumps(scenario_to_doc(scenario), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            print(f"wrote scenario (seed {args.seed}) to {args.out}")
            return EXIT_OK

        if args.command == "serve":
            from .server import serve_forever

            cfg = _config_from_args(args)
            serve_forever(cfg, host=args.host, port=args.port, log_dir=args.log_dir)
            return EXIT_OK
    except BrokenPipeError:
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - single CLI boundary
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
