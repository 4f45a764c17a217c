"""Command-line entry point.

Subcommands:
  run      simulate all configured (scheme, L) branches and write the report
  theory   evaluate the closed-form steady-state MSD only (no simulation)
  validate check a config file, topology feasibility, and weight constraints

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
import argparse
import sys

import numpy as np

from .config import load_config
from .exceptions import ConfigError, NumericError
from .harness import build_experiment, emit_report, run_experiment, theory_only

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pdkf",
        description="Partial-diffusion Kalman filtering: Monte-Carlo simulation "
                    "and steady-state MSD theory over sensor networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the Monte-Carlo experiment and emit reports")
    p_run.add_argument("--config", required=True, help="experiment config file")
    p_run.add_argument("--out", required=True, help="output directory for CSVs and figures")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering, write CSVs and meta.json only")
    p_run.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_theory = sub.add_parser("theory", help="closed-form steady-state MSD, no simulation")
    p_theory.add_argument("--config", required=True)

    p_val = sub.add_parser("validate", help="validate a config file and its feasibility")
    p_val.add_argument("--config", required=True)

    return parser


def _cmd_run(args):
    config = load_config(args.config)
    report = run_experiment(config, progress=not args.quiet)
    paths = emit_report(report, args.out)
    if not args.no_figures:
        from .plots import render_report
        paths.update(render_report(report, args.out))
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return EXIT_OK


def _cmd_theory(args):
    config = load_config(args.config)
    rows = theory_only(config)
    print("scheme,L,rho_F,rho_loop,node,msd_theory_db")
    for scheme, L, stab, theory in rows:
        rho_F = config.model.spectral_radius()
        if theory is None:
            rho_loop = repr(stab.rho_loop) if stab is not None else "nan"
            print(f"{scheme},{L},{rho_F!r},{rho_loop},all,inapplicable")
            continue
        for k, value in enumerate(theory.msd_per_node):
            db = 10.0 * np.log10(value) if value > 0 else float("-inf")
            print(f"{scheme},{L},{rho_F!r},{stab.rho_loop!r},{k},{db!r}")
    return EXIT_OK


def _cmd_validate(args):
    config = load_config(args.config)
    model, topology, sensors, weights = build_experiment(config)
    print(f"config ok: N={topology.N}, M={model.M}, scheme={config.scheme}, "
          f"L={config.L_values}, runs={config.runs}, horizon={config.horizon}, "
          f"window={config.window}, seed={config.seed}")
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "theory": _cmd_theory, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
