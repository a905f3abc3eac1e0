"""Command-line interface.

Subcommands
-----------
run <config>        execute a JSON scenario file and write its CSV tables
preset <name>       execute a named figure preset (``--paths/--dt/--seed/--out``)
list-presets        print the available preset names
validate <config>   parse and validate a scenario file without running it

Environment overrides (the only two honoured): ``TBDYN_OUT`` sets the
default output directory and ``TBDYN_WORKERS`` the ensemble thread count.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .csvio import write_tables
from .scenarios import (PRESET_NAMES, parse_config, preset, run_scenario,
                        scale_preset, serialize_config)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbdyn",
        description="Within-host infection dynamics: ODE/SDE simulation, "
                    "equilibrium and bifurcation analysis, figure presets.")
    parser.add_argument("--version", action="version", version=f"tbdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a JSON scenario file")
    p_run.add_argument("config", help="path to the scenario JSON document")
    p_run.add_argument("--out", default=None, help="output directory for CSV tables")

    p_preset = sub.add_parser("preset", help="execute a named figure preset")
    p_preset.add_argument("name", help="preset name (see list-presets)")
    p_preset.add_argument("--paths", type=int, default=None,
                          help="override the ensemble path count")
    p_preset.add_argument("--dt", type=float, default=None,
                          help="override the simulation step size")
    p_preset.add_argument("--seed", type=int, default=None,
                          help="override the base random seed")
    p_preset.add_argument("--out", default=None, help="output directory for CSV tables")

    sub.add_parser("list-presets", help="print the available preset names")

    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("config", help="path to the scenario JSON document")
    return parser


def _out_dir(flag_value: str | None) -> str:
    if flag_value is not None:
        return flag_value
    return os.environ.get("TBDYN_OUT", "tbdyn-out")


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ValueError(f"cannot read config file {path!r}: {exc}") from exc


def _execute(scenario, out_dir: str) -> int:
    tables = run_scenario(scenario)
    paths = write_tables(tables, out_dir)
    for path in paths:
        print(path)
    return 0


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        scenario = parse_config(_read(args.config))
        return _execute(scenario, _out_dir(args.out))
    if args.command == "preset":
        scenario = scale_preset(preset(args.name), n_paths=args.paths,
                                dt=args.dt, seed=args.seed)
        return _execute(scenario, _out_dir(args.out))
    if args.command == "list-presets":
        for name in PRESET_NAMES:
            print(name)
        return 0
    if args.command == "validate":
        scenario = parse_config(_read(args.config))
        # round-trip check: the canonical form must parse back to equality
        if parse_config(serialize_config(scenario)) != scenario:
            raise RuntimeError("serialization round-trip failed for this document")
        print(f"ok: {scenario.name} (mode {scenario.mode})")
        return 0
    raise ValueError(f"unknown command {args.command!r}")


def _error_record(exc: BaseException, code: int) -> None:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ValueError as exc:          # ConfigError / DomainError / bad input
        _error_record(exc, 2)
        return 2
    except (RuntimeError, ArithmeticError) as exc:   # numeric failures
        _error_record(exc, 3)
        return 3


if __name__ == "__main__":
    sys.exit(main())
