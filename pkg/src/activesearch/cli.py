"""Command-line entry point.

Exit status: 0 on success, 1 for configuration or input errors, 2 when any
episode aborted at run time (details in ``errors.csv``).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ActiveSearchError, ConfigurationError, InputError
from .harness import (
    ExperimentConfig,
    run_clump_analysis,
    run_prune_benchmark,
    run_search_experiment,
    run_survey_experiment,
)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2


def _common(p, budget_default=100):
    p.add_argument("--data", default="disks:250", help="CSV path or disks:N (default: %(default)s)")
    p.add_argument("--budget", type=int, default=budget_default)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--no-seed-target", dest="seed_target", action="store_false",
                   help="start without a revealed target")
    p.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto")
    p.add_argument("--jobs", type=int, default=1, help="repeats run in this many processes")
    p.add_argument("--out", default="results")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activesearch",
                                     description="Bayesian active search and surveying experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-search", help="cumulative targets found by l-step lookahead search")
    _common(p)
    p.add_argument("--lookahead", type=int, default=1)
    p.add_argument("--policy", choices=("search", "uncertainty", "random"), default="search")
    p.add_argument("--no-prune", dest="prune", action="store_false")
    p.add_argument("--literal-incumbent", dest="tighten", action="store_false",
                   help="prune against the greedy point's value only")

    p = sub.add_parser("run-survey", help="class-proportion estimates under a surveying policy")
    _common(p, budget_default=75)
    p.add_argument("--policy", choices=("survey", "uncertainty", "random"), default="survey")
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--eval-repeats", type=int, default=5)

    p = sub.add_parser("bench-prune", help="expansions with and without pruning")
    _common(p, budget_default=0)
    p.add_argument("--lookahead-max", type=int, default=3)
    p.add_argument("--literal-incumbent", dest="tighten", action="store_false")
    p.add_argument("--timing", action="store_true",
                   help="also write wall-clock times (not reproducible)")

    p = sub.add_parser("clump-analyze", help="exact values and bounds on clump spaces")
    p.add_argument("--space", help="count,size,prob file")
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--t", type=int)
    p.add_argument("--sweep", help="e.g. 'eps=0.01,0.02;delta=0.05;t=10,100,1000'")
    p.add_argument("--out", default="results")
    return parser


def _config(args, **extra) -> ExperimentConfig:
    backend = None if args.backend == "auto" else args.backend
    return ExperimentConfig(data=args.data, budget=args.budget, k=args.k, gamma=args.gamma,
                            seed=args.seed, repeats=args.repeats, seed_target=args.seed_target,
                            backend=backend, jobs=args.jobs, out=args.out, **extra)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run-search":
            result = run_search_experiment(_config(
                args, policy=args.policy, lookahead=args.lookahead, prune=args.prune,
                tighten=args.tighten))
        elif args.command == "run-survey":
            result = run_survey_experiment(_config(
                args, policy=args.policy, fraction=args.fraction, eval_repeats=args.eval_repeats))
        elif args.command == "bench-prune":
            result = run_prune_benchmark(_config(
                args, lookahead_max=args.lookahead_max, tighten=args.tighten, timing=args.timing))
        else:
            result = run_clump_analysis(args.space, args.ell, args.m, args.t, args.sweep, args.out)
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ActiveSearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name, path in result.files.items():
        print(f"{name}: {path}")
    if not result.ok:
        print(f"{len(result.errors)} episode(s) aborted; see errors.csv", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
