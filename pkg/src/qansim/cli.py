"""Command-line interface.

Subcommands: run-figure, sweep, calibrate, validate.  Exit code 0 on
success; on failure a single ``error: category=<cat>: <message>`` line
goes to stderr and the exit code encodes the category (see _EXIT_CODES).
"""

import argparse
import sys

from . import scenario
from .errors import QansimError

_EXIT_CODES = {
    "config": 2,
    "usage": 2,
    "validation": 3,
    "infeasible": 4,
    "calibration": 5,
    "error": 1,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qansim",
        description="Multicore-fiber quantum access network simulator")
    parser.add_argument("--config", default=None,
                        help="scenario config file (default: bundled experiment.cfg)")
    parser.add_argument("--output", default=None,
                        help="output CSV path (default: config output or stdout)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the Monte Carlo seed")
    parser.add_argument("--mc-gates", type=int, default=None,
                        help="Monte Carlo gates per intensity; adds empirical "
                             "columns to run-figure fig3")
    sub = parser.add_subparsers(dest="command", required=True)

    fig = sub.add_parser("run-figure", help="reproduce a named figure")
    fig.add_argument("name", choices=scenario.FIGURES)

    sub.add_parser("sweep", help="run the configured parameter sweep")
    sub.add_parser("calibrate", help="fit detector error and Raman magnitude")
    sub.add_parser("validate", help="load and validate the config")
    return parser


def _load(args) -> scenario.ScenarioConfig:
    path = args.config or scenario.bundled_config_path()
    config = scenario.load_config(path)
    if args.seed is not None:
        config.monte_carlo = scenario.McSettings(
            num_gates=config.monte_carlo.num_gates, seed=args.seed)
    if args.mc_gates is not None:
        config.monte_carlo = scenario.McSettings(
            num_gates=args.mc_gates, seed=config.monte_carlo.seed)
    return config


def _emit(table: scenario.Table, args, config) -> None:
    target = args.output or config.output
    if target:
        table.write_csv(target)
    else:
        sys.stdout.write(table.to_csv_text())


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = _load(args)
        if args.command == "validate":
            print(f"ok: {config.topology.num_onus} ONU(s), "
                  f"{config.topology.num_cores} cores, "
                  f"quantum core {config.topology.quantum_core}")
            return 0
        if args.command == "calibrate":
            result = scenario.calibrate(config)
            print(f"e_det = {result.e_det:.9g}")
            print(f"rho0 = {result.rho0:.9g}")
            for label, target, model, residual in result.residuals:
                print(f"residual {label}: target {target:.9g} "
                      f"model {model:.9g} delta {residual:+.3g}")
            return 0
        if args.command == "run-figure":
            mc_gates = args.mc_gates if args.name == "fig3" else None
            table = scenario.run_figure(args.name, config, mc_gates=mc_gates,
                                        mc_seed=args.seed)
        else:
            table = scenario.sweep(config)
        _emit(table, args, config)
        return 0
    except QansimError as exc:
        print(f"error: category={exc.category}: {exc}", file=sys.stderr)
        return _EXIT_CODES.get(exc.category, 1)
    except (ValueError, KeyError) as exc:
        print(f"error: category=usage: {exc}", file=sys.stderr)
        return _EXIT_CODES["usage"]


if __name__ == "__main__":
    sys.exit(main())
