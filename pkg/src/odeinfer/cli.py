"""``odeinfer`` command line.

Exit codes: 0 success, 1 invalid configuration or data, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import (ConfigError, DataError, DomainError, InitializationError, ScanError,
                     SolverError)
from .io import TASKS, load_config

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odeinfer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="task", required=True)
    helps = {
        "simulate": "forward-solve the model and write the trajectory",
        "scan": "one-parameter log-likelihood scan with jaggedness summary",
        "mcmc": "adaptive-covariance Metropolis chains plus manifest",
        "diagnose": "step-size sensitivity and surface diagnostics",
        "bound": "check the likelihood error bound at random parameter values",
    }
    for task in TASKS:
        p = sub.add_parser(task, help=helps[task])
        p.add_argument("--config", required=True, help="INI experiment config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=_u64, default=None, help="overrides [experiment] seed")
        p.add_argument("--threads", type=_positive, default=os.cpu_count() or 1,
                       help="worker threads (default: available CPUs)")
    return parser


def main(argv=None) -> int:
    from .tasks import run
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_task(args.task)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        summary = run(cfg, args.out, threads=args.threads)
    except (ConfigError, DataError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, ScanError, InitializationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(summary, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
