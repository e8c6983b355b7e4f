"""``qig`` command-line interface.

Exit codes: 0 success, 1 a property check failed, 2 malformed configuration
or usage, 3 numerical or I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .checks import run_checks
from .config import ConfigError, RunConfig, load_config, output_dir
from .errors import DivergentQFIError, DomainError, IntegrationError, ValidationError
from .gksl import integrate
from .mpemba import analyse_state, build_scenario, run_experiment
from .output import trajectory_columns, write_csv, write_mpemba, write_svg, write_table

logger = logging.getLogger("qig")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _simulate(args) -> int:
    config = load_config(args.config)
    outdir = output_dir(config)
    if config.system is not None:
        lind, rho0, beta = config.system.lindbladian, config.system.initial_state, config.system.beta
        grid = config.grid()
    elif config.scenario is not None:
        scenario = config.mpemba_scenario()
        system = build_scenario(scenario)
        lind, rho0, beta = system.lindbladian, system.rho_ref, scenario.beta
        grid = scenario.grid()
    else:
        raise ConfigError("simulate needs a 'system' or 'scenario' section", str(args.config))
    traj = integrate(lind, rho0, grid)
    run = analyse_state(traj, config.metrics, beta=beta)
    paths = [
        write_table(outdir / "trajectory.csv", trajectory_columns(run)),
        write_csv(run, outdir / "geometry.csv", config.metrics),
    ]
    if config.emit_svg:
        paths += [write_svg(p) for p in list(paths)]
    for p in paths:
        print(p)
    return EXIT_OK


def _mpemba(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    bundle = run_experiment(config.mpemba_scenario(), config.metrics)
    for p in write_mpemba(bundle, output_dir(config), config.emit_svg):
        print(p)
    c = bundle.crossing
    print(f"crossing: t_M={c.t_m!r}" if c.t_m is not None else "crossing: none")
    return EXIT_OK


def _check(args) -> int:
    failed = 0
    total = 0
    for res in run_checks(args.seed, quantum_instances=args.instances):
        print(res.line())
        total += 1
        failed += not res.passed
    print(f"{total - failed}/{total} checks passed (seed={args.seed})")
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


def _plot(args) -> int:
    if args.output and len(args.csv) > 1:
        raise ValidationError("--output needs exactly one CSV file")
    for path in args.csv:
        print(write_svg(path, args.output))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qig", description="Quantum information geometry of open-system relaxation.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a configured system; write trajectory.csv and geometry.csv")
    p.add_argument("--config", required=True, type=Path)
    p.set_defaults(func=_simulate)

    p = sub.add_parser("mpemba", help="reproduce the qubit Mpemba experiment (figure CSVs and summary.txt)")
    p.add_argument("--config", type=Path, default=None)
    p.set_defaults(func=_mpemba)

    p = sub.add_parser("check", help="run the property suite on seeded random instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=5, help="number of random GKSL systems")
    p.set_defaults(func=_check)

    p = sub.add_parser("plot", help="render CSV files as SVG line charts")
    p.add_argument("csv", nargs="+", type=Path)
    p.add_argument("--output", type=Path, default=None, help="SVG path (single CSV only)")
    p.set_defaults(func=_plot)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, DivergentQFIError, DomainError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
