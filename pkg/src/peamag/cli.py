"""Command line front end.

peamag --experiment napea --trials 200 --seed 7 --out-dir runs/

Defaults come from the built-in configuration; --config supplies an INI file
overriding any subset of it, and the remaining flags override the file.
Worker count resolves as --threads, then the PEAMAG_THREADS environment
variable, then the configuration value.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import default_config, load_config, serialize_config
from .harness import (
    THREADS_ENV_VAR,
    experiment_names,
    run_experiment,
    spec_from_config,
    write_report,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peamag",
        description="Monte-Carlo single-spin magnetometry experiments")
    parser.add_argument("--experiment", metavar="NAME",
                        help="experiment to run (default from configuration); "
                             "one of: " + ", ".join(experiment_names()))
    parser.add_argument("--config", metavar="FILE",
                        help="INI configuration file")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="master seed for all trial streams")
    parser.add_argument("--trials", type=int, metavar="N",
                        help="trials (or averages) per sweep point")
    parser.add_argument("--out-dir", default=".", metavar="DIR",
                        help="directory for the CSV/JSON reports (default .)")
    parser.add_argument("--threads", type=int, metavar="N",
                        help="worker processes (default 1)")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration and exit")
    return parser


def _resolve_threads(flag_value) -> int | None:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(
                f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from None
    return None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.dump_config:
            sys.stdout.write(serialize_config(cfg))
            return 0
        spec = spec_from_config(cfg, name=args.experiment, seed=args.seed,
                                trials=args.trials,
                                threads=_resolve_threads(args.threads))
        report = run_experiment(spec)
        paths = write_report(report, args.out_dir)
    except (ValueError, OSError) as exc:
        print(f"peamag: error: {exc}", file=sys.stderr)
        return 2
    print(f"experiment {spec.name}: {len(report.rows)} rows, "
          f"{report.wallclock_s:.2f} s")
    for key in sorted(paths):
        print(f"  wrote {paths[key]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
