"""Compare the compiled k-NN search kernel with the pure-Python engine.

Times one lookahead decision per (horizon, pruning) setting on a disks data
set with a single revealed target, checks that both backends return the same
point, value and expansion count, and prints a table.

    python benchmarks/bench_backends.py --n 250 --k 50 --max-horizon 3
"""

import argparse
import statistics
import sys
import time

import numpy as np

from activesearch import HAVE_COMPILED, KnnState, build_neighbor_index, generate_disks
from activesearch.pruning import search_decision


def make_state(n, k, seed):
    data = generate_disks(n, seed)
    state = KnnState(build_neighbor_index(data.features, k), 0.1)
    targets = np.flatnonzero(data.labels)
    rng = np.random.default_rng(seed)
    state.condition(int(targets[rng.integers(targets.size)]), 1)
    return state


def best_time(state, horizon, prune, backend, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        d = search_decision(state, horizon, prune=prune, backend=backend)
        times.append(time.perf_counter() - t0)
    return d, min(times), statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=250)
    ap.add_argument("--k", type=int, default=50)
    ap.add_argument("--max-horizon", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--python-budget", type=float, default=60.0,
                    help="skip python runs whose compiled time predicts more than this many seconds")
    args = ap.parse_args(argv)
    if not HAVE_COMPILED:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1

    state = make_state(args.n, args.k, args.seed)
    print(f"disks:{args.n}  k={args.k}  seed={args.seed}")
    print(f"{'ell':>3} {'prune':>5} {'expansions':>11} {'compiled s':>11} {'python s':>10} {'speedup':>8}")
    for h in range(1, args.max_horizon + 1):
        for prune in (True, False):
            dc, tc, _ = best_time(state, h, prune, "compiled", args.repeats)
            # the python engine is roughly 100x slower; skip hopeless runs
            if tc * 200 > args.python_budget:
                print(f"{h:>3} {str(prune):>5} {dc.expansions:>11} {tc:>11.4f} {'skipped':>10} {'':>8}")
                continue
            dp, tp, _ = best_time(state, h, prune, "python", 1)
            if (dp.point, dp.value, dp.expansions) != (dc.point, dc.value, dc.expansions):
                print(f"backends disagree at ell={h} prune={prune}", file=sys.stderr)
                return 2
            print(f"{h:>3} {str(prune):>5} {dc.expansions:>11} {tc:>11.4f} {tp:>10.4f} {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
