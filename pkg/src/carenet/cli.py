"""Command line entry point.

`carenet run` executes a scenario and writes three artifacts into the
output directory: events.jsonl, audit.jsonl, report.json.  Exit code 0
on success, 2 for configuration problems, 3 for I/O failures.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .scenario import (
    BUILTIN_SCENARIOS,
    builtin_scenario_text,
    load_scenario,
    parse_scenario,
    run_scenario,
    with_overrides,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carenet",
        description="Run health-network simulation scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario and write its artifacts")
    run.add_argument("config", nargs="?", help="path to a scenario TOML file")
    run.add_argument(
        "--scenario",
        choices=BUILTIN_SCENARIOS,
        help="run a bundled scenario instead of a config file",
    )
    run.add_argument("--out", required=True, help="output directory for artifacts")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument(
        "--ticks", type=int, default=None, help="override the scenario duration"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "run":
        return _cmd_run(args)
    parser.error(f"unknown command {args.command!r}")  # pragma: no cover
    return EXIT_CONFIG  # pragma: no cover


def _cmd_run(args: argparse.Namespace) -> int:
    if (args.config is None) == (args.scenario is None):
        print(
            "config error: run needs exactly one of a config path or --scenario",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    try:
        if args.scenario is not None:
            scenario = parse_scenario(builtin_scenario_text(args.scenario))
        else:
            try:
                scenario = load_scenario(args.config)
            except OSError as exc:
                print(f"i/o error: cannot read {args.config}: {exc}", file=sys.stderr)
                return EXIT_IO
        scenario = with_overrides(scenario, seed=args.seed, duration=args.ticks)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run_scenario(scenario, args.out)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    traffic = result.report["traffic"]
    print(
        f"{scenario.name}: {traffic['emitted']} emitted, "
        f"{traffic['delivered']} delivered, {traffic['dropped_total']} dropped"
    )
    print(f"artifacts in {args.out}: events.jsonl audit.jsonl report.json")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
