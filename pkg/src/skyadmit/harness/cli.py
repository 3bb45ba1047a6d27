"""Command line entry point: ``skyadmit run CONFIG [overrides]``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from ..learner import Algorithm
from .config import DEFAULT_GRIDS, EXPERIMENTS, ConfigError, parse_config
from .experiments import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skyadmit")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a YAML config file")
    run.add_argument("config", help="path to the config file")
    run.add_argument("--experiment", choices=EXPERIMENTS)
    run.add_argument("--seed", type=int, action="append",
                     help="seed to run (repeatable); replaces the config's seed list")
    run.add_argument("--steps", type=int, help="learner steps per run")
    run.add_argument("--out-dir")
    run.add_argument("--algorithm", choices=[a.value for a in Algorithm])
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    learner = config.learner
    if args.steps is not None:
        if args.steps < 0:
            print("error: --steps must be >= 0", file=sys.stderr)
            return 2
        learner = dataclasses.replace(learner, total_steps=args.steps)
    if args.algorithm:
        learner = dataclasses.replace(learner, algorithm=Algorithm(args.algorithm))
    changes = {"learner": learner}
    if args.experiment:
        changes["experiment"] = args.experiment
        if not config.sweep:
            changes["sweep"] = tuple(DEFAULT_GRIDS.get(args.experiment, ()))
    if args.seed:
        changes["seeds"] = tuple(args.seed)
    if args.out_dir:
        changes["out_dir"] = args.out_dir
    config = dataclasses.replace(config, **changes)
    outputs = run_experiment(config)
    for o in outputs:
        r = o.row
        label = "" if r.sweep_value is None else f"value={r.sweep_value:g} "
        print(f"{label}seed={r.seed} theta=({r.theta_b:.4f}, {r.theta_c:.4f}, {r.theta_s:.4f}) "
              f"psi_exact={r.psi_learned_exact:.4f} greedy={r.psi_greedy_exact:.4f} "
              f"optimal={r.psi_optimal:.4f}")
    print(f"wrote {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
