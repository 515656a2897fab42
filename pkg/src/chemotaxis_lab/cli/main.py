"""Entry point of the ``chemotaxis-lab`` command."""

from __future__ import annotations

import argparse
import sys

from chemotaxis_lab.cli.commands import (
    COMMANDS, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, EXIT_RUNTIME, Flags, UsageError, run_command)
from chemotaxis_lab.cli.config import FORMATS, dump_defaults, load_config
from chemotaxis_lab.errors import ChemotaxisLabError, ParseError, ValidationError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="chemotaxis-lab",
        description="Norm-inflation experiments for a parabolic-hyperbolic chemotaxis system.")
    p.add_argument("command", choices=COMMANDS + ("defaults",),
                   help="command to run; 'defaults' prints the default config")
    p.add_argument("check_id", nargs="?", help="check id or 'all' (verify only)")
    p.add_argument("--config", metavar="PATH", help="YAML config file")
    p.add_argument("--seed", type=int, help="override checks.seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--out", metavar="DIR", help="output directory (beats CHEMOTAXIS_LAB_OUT)")
    p.add_argument("--format", choices=FORMATS, action="append", dest="formats",
                   help="row format; repeat for both (default from config)")
    p.add_argument("--input", metavar="FILE", help="field container for norm/decompose")
    return p


def _report_line(rep) -> str:
    return f"{rep.check_id}: {rep.verdict}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "defaults":
        sys.stdout.write(dump_defaults())
        return EXIT_PASS
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ValidationError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChemotaxisLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    flags = Flags(seed=args.seed, workers=args.workers, out=args.out,
                  formats=tuple(args.formats) if args.formats else None,
                  check_id=args.check_id, input=args.input)
    try:
        result = run_command(args.command, cfg, flags)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surfaced with context as a runtime failure
        print(f"error: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for rep in result.reports:
        print(_report_line(rep))
    return EXIT_PASS if result.status == EXIT_PASS else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
