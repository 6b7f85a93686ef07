"""Command-line entry point.

Usage: sqe <experiment> --config <path> [--seed N] [--replicas N] [--out DIR]

Exit codes: 0 all verdicts pass, 1 metric failure, 2 configuration error,
3 numerical explosion.
"""

import argparse
import sys

from .config import ConfigError, EXPERIMENT_NAMES, parse_config
from .experiments import run_experiment


def build_parser():
    p = argparse.ArgumentParser(
        prog="sqe",
        description="Spectral experiments for a renormalized stochastic "
                    "heat equation with polynomial nonlinearity on the "
                    "2-torus.")
    p.add_argument("experiment", choices=EXPERIMENT_NAMES)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--out", default=None, help="artifact output directory")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "replicas": args.replicas,
                 "out": args.out}
    try:
        cfg = parse_config(args.experiment, args.config, overrides)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2
    # tolerances and effective settings are echoed before the run starts
    echo = cfg.echo()
    print("running %s with:" % cfg.experiment)
    for k in sorted(echo):
        print("  %s = %r" % (k, echo[k]))
    rep = run_experiment(cfg)
    print(rep.summary())
    return rep.exit_code()


if __name__ == "__main__":
    sys.exit(main())
