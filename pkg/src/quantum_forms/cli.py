"""Command-line entry point: run, list, validate and report scenarios.

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 configuration
error, 3 runtime or numerical error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, QuantumFormsError, StabilityViolation
from .scenarios import (BUILTINS, OUTPUT_ENV, Scenario, builtin, list_builtin, output_root,
                        render_report, run_scenario, validate)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _load(target: str) -> Scenario:
    if target in BUILTINS:
        return builtin(target)
    path = Path(target)
    if not path.is_file():
        raise ConfigError(f"not a built-in name or readable file: {target}")
    return Scenario.from_json(path.read_text())


def _cmd_run(args) -> int:
    s = _load(args.scenario)
    root = Path(args.output_root) if args.output_root else output_root()
    manifest = run_scenario(s, root)
    print(render_report(manifest.output_dir))
    return manifest.exit_code


def _cmd_list(args) -> int:
    for name in list_builtin():
        print(name)
    return EXIT_OK


def _cmd_validate(args) -> int:
    target = args.scenario
    if target in BUILTINS:
        cfg = BUILTINS[target]
    else:
        try:
            cfg = json.loads(Path(target).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"ConfigError: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    errors = validate(cfg)
    for e in errors:
        print(e, file=sys.stderr)
    if not errors:
        print("ok")
    return EXIT_CONFIG if errors else EXIT_OK


def _cmd_report(args) -> int:
    print(render_report(args.directory))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantum-forms",
        description=f"Run quantum-formulation scenarios. Output root defaults to ${OUTPUT_ENV} "
                    "or ./runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a built-in scenario or a JSON scenario file")
    p.add_argument("scenario")
    p.add_argument("--output-root", default=None)
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("list", help="list built-in scenarios")
    p.set_defaults(func=_cmd_list)
    p = sub.add_parser("validate", help="check a scenario without running it")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_validate)
    p = sub.add_parser("report", help="summarize a finished run directory")
    p.add_argument("directory")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, StabilityViolation) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuantumFormsError, ArithmeticError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
