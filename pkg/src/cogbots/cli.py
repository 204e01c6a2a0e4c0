"""Command line entry point.

    cogbots run --scenario PATH [--seed N] --out DIR [--emit probabilities,gains,response]
    cogbots replay --trace DIR/trace.csv

Exit codes: 0 success, 1 configuration error, 2 runtime abort (numerical
blow-up, I/O failure, or a replay that does not reproduce the trace).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .config import ConfigError
from .dynamics import NumericalBlowUp
from .harness import run
from .scenario import load_scenario, serialize_scenario
from .series import SERIES, emit_series

log = logging.getLogger("cogbots")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
RESOLVED_SCENARIO = "scenario.yaml"
OUTPUTS = {
    "trace.csv": "trace_csv",
    "messages.csv": "messages_csv",
    "events.csv": "events_csv",
    "decisions.csv": "decisions_csv",
}


def _parse_emit(text: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in SERIES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown series {', '.join(bad)}; choose from {', '.join(SERIES)}")
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogbots", description="Cognitive multi-robot simulation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write its trace")
    p_run.add_argument("--scenario", required=True, type=Path)
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out", required=True, type=Path)
    p_run.add_argument("--emit", type=_parse_emit, default=[],
                       help="comma-separated figure series: " + ",".join(SERIES))

    p_replay = sub.add_parser("replay", help="re-run a recorded trace and diff it byte for byte")
    p_replay.add_argument("--trace", required=True, type=Path)
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_scenario(args.scenario)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
    except ValueError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG

    try:
        args.out.mkdir(parents=True, exist_ok=True)
        trace = run(config)
        (args.out / RESOLVED_SCENARIO).write_text(serialize_scenario(config), encoding="utf-8")
        for name, method in OUTPUTS.items():
            (args.out / name).write_text(getattr(trace, method)(), encoding="utf-8", newline="")
        for which in args.emit:
            for path in emit_series(trace, which, args.out, config):
                log.info("wrote %s", path)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except NumericalBlowUp as exc:
        log.error("run aborted: %s", exc)
        return EXIT_RUNTIME
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_RUNTIME
    log.info("%d rows written to %s", len(trace.rows), args.out / "trace.csv")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    trace_path: Path = args.trace
    run_dir = trace_path.parent
    try:
        config = load_scenario(run_dir / RESOLVED_SCENARIO)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        recorded = trace_path.read_text(encoding="utf-8")
        trace = run(config)
    except NumericalBlowUp as exc:
        log.error("run aborted: %s", exc)
        return EXIT_RUNTIME
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_RUNTIME

    mismatched = []
    if trace.trace_csv() != recorded:
        mismatched.append(trace_path.name)
    for name, method in OUTPUTS.items():
        sibling = run_dir / name
        if name != "trace.csv" and sibling.exists():
            if sibling.read_text(encoding="utf-8") != getattr(trace, method)():
                mismatched.append(name)
    if mismatched:
        log.error("replay differs from the recording: %s", ", ".join(mismatched))
        return EXIT_RUNTIME
    log.info("replay reproduced %s byte for byte", trace_path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command == "run":
        return cmd_run(args)
    return cmd_replay(args)


if __name__ == "__main__":
    sys.exit(main())
