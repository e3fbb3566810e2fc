"""Command line entry point: ``tilapia-mpc {run,sweep,noise}``.

Exit codes: 0 success, 2 invalid configuration, 3 solver or integration
failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, IntegrationError, SolverError
from .experiment import horizon_sweep, load_config, noise_comparison, run_experiment

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (defaults are built in)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--controllers", help="comma-separated subset of mpc1,mpc2,mpc3")
    common.add_argument("--duration", type=float, help="simulated days")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="tilapia-mpc",
        description="Receding-horizon feeding/temperature/oxygen control of tilapia growth.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="compare controllers (comparison.csv)")
    sweep = sub.add_parser("sweep", parents=[common], help="prediction-horizon sweep (sweep.csv)")
    sweep.add_argument("--horizons", type=_int_list)
    sweep.add_argument("--repeats", type=int)
    noise = sub.add_parser("noise", parents=[common], help="actuator noise study (noise.csv)")
    noise.add_argument("--snr-db", type=float)
    noise.add_argument("--seeds", type=_int_list)
    return parser


def _overrides(args) -> dict:
    over = {}
    if args.out is not None:
        over["out_dir"] = args.out
    if args.seed is not None:
        over["seed"] = args.seed
    if args.workers is not None:
        over["workers"] = args.workers
    if args.controllers is not None:
        over["controllers"] = [c.strip() for c in args.controllers.split(",") if c.strip()]
    if args.duration is not None:
        over["duration"] = args.duration
    return over


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, overrides=_overrides(args))
        if args.command == "run":
            for r in run_experiment(cfg):
                print(f"{r.controller}: mse={r.tracking_mse:.4g} final={r.final_weight:.2f} g "
                      f"feed={r.total_feed:.2f} g profit%={r.ledger.profit_percentage} "
                      f"fcr={r.fcr}")
        elif args.command == "sweep":
            for row in horizon_sweep(cfg, args.horizons, args.repeats):
                print(f"{row['controller']} N={row['N']}: mse={row['mse']:.4g} "
                      f"feed={row['feed_g']:.2f} g elapsed={row['elapsed_s']:.2f} s")
        else:
            rows, _ = noise_comparison(cfg, args.snr_db, args.seeds)
            print(f"wrote {len(rows)} rows to {cfg.out_dir}/noise.csv")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, IntegrationError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
