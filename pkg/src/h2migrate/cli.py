"""Command-line entry point: simulate / validate / constants."""

import argparse
import sys

from .constitutive import derived_constants
from .errors import ConfigError, H2MigrateError
from .scenario import (
    config_to_text,
    load_config,
    preset,
    run_scenario,
    write_outputs,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2


def _get_config(args):
    if getattr(args, "case", None) is not None:
        return preset(args.case)
    if getattr(args, "config", None):
        return load_config(args.config)
    raise ConfigError("pass --case 1|2 or --config FILE")


def _cmd_simulate(args):
    config = _get_config(args)
    problem, summary, snapshots = run_scenario(config)
    paths, spath = write_outputs(args.out, problem, summary, snapshots)
    yr = 3.1536e7
    t1 = "n/a" if summary.T1 is None else f"{summary.T1 / yr:.4g}"
    t3 = "n/a" if summary.T3 is None else f"{summary.T3 / yr:.4g}"
    print(f"simulate: {len(paths)} record files in {args.out}; "
          f"T1={t1} yr, T2={summary.T2 / yr:.4g} yr, T3={t3} yr, "
          f"{summary.steps} steps")
    return EXIT_OK


def _cmd_validate(args):
    config = load_config(args.config)
    from .scenario import build_problem
    build_problem(config)
    print(f"validate: {args.config} OK "
          f"({config.grid.nx * (config.grid.ny or 1)} cells)")
    return EXIT_OK


def _cmd_constants(args):
    config = _get_config(args)
    c = derived_constants(config.fluid)
    print(f"C_h = {c.C_h:.6e} 1/Pa")
    print(f"C_v = {c.C_v:.6e} 1/Pa")
    print(f"C_delta = {c.C_delta:.6e} 1/Pa")
    print(f"F = {c.F:.6g}")
    print(f"G = {c.G:.6g}")
    return EXIT_OK


def _cmd_show_config(args):
    print(config_to_text(_get_config(args)), end="")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="h2migrate",
        description="Water/hydrogen two-phase porous-media flow simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario and write records")
    p_sim.add_argument("--case", type=int, choices=(1, 2))
    p_sim.add_argument("--config")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_con = sub.add_parser("constants", help="print derived fluid constants")
    p_con.add_argument("--case", type=int, choices=(1, 2), default=1)
    p_con.add_argument("--config")
    p_con.set_defaults(func=_cmd_constants)

    p_show = sub.add_parser("show-config",
                            help="print a preset or file as canonical YAML")
    p_show.add_argument("--case", type=int, choices=(1, 2))
    p_show.add_argument("--config")
    p_show.set_defaults(func=_cmd_show_config)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except H2MigrateError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
