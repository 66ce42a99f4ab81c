#!/usr/bin/env python3
"""Build the broadcast-channel value table across horizons.

For each horizon this prints the exact value (while the oracle is
affordable), the memory-bounded planner's best value over a batch of
seeds, the partial-backup variant, and the uniform-random baseline.

Example:
    python3 scripts/reproduce_value_table.py --horizons 1..10,20,50,100
"""

import argparse
import sys
import time
from dataclasses import replace

from mbdp import (
    CapacityError,
    SolverConfig,
    build_builtin,
    exact_solve,
    improved_mbdp,
    mbdp,
    uniform_random_value,
)


def parse_horizons(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problem", default="mabc")
    ap.add_argument("--horizons", default="1..10,20,50,100")
    ap.add_argument("--seeds", type=int, default=10, help="seeds per horizon")
    ap.add_argument("--max-trees", type=int, default=3)
    ap.add_argument("--max-obs", type=int, default=None,
                    help="budget for the partial-backup column (default: alphabet - 1, min 1)")
    ap.add_argument("--heuristics", default="random",
                    help="comma list, e.g. random or mdp,random")
    ap.add_argument("--oracle-limit", type=int, default=4,
                    help="compute the exact column for horizons up to this")
    args = ap.parse_args(argv)

    heuristics = tuple(args.heuristics.split(","))
    horizons = parse_horizons(args.horizons)
    base = build_builtin(args.problem)
    if args.max_obs is None:
        args.max_obs = max(1, max(len(o) for o in base.observations) - 1)

    print(f"# problem={args.problem} max_trees={args.max_trees} "
          f"heuristics={','.join(heuristics)} seeds=0..{args.seeds - 1} "
          f"partial max_obs={args.max_obs}")
    header = f"{'h':>4}  {'optimal':>10}  {'full':>10}  {'partial':>10}  {'random':>10}  {'secs':>7}"
    print(header)
    print("-" * len(header))

    for h in horizons:
        model = build_builtin(args.problem, horizon=h)
        t0 = time.perf_counter()

        optimal = ""
        if h <= args.oracle_limit:
            try:
                optimal = f"{exact_solve(model).value:10.4f}"
            except CapacityError:
                optimal = f"{'n/a':>10}"
        else:
            optimal = f"{'':>10}"

        cfg = SolverConfig(max_trees=args.max_trees, heuristics=heuristics)
        full = max(
            mbdp(model, replace(cfg, seed=s)).value for s in range(args.seeds)
        )
        partial = max(
            improved_mbdp(model, replace(cfg, seed=s, max_obs=args.max_obs)).value
            for s in range(args.seeds)
        )
        rand = uniform_random_value(model)
        secs = time.perf_counter() - t0
        print(f"{h:>4}  {optimal}  {full:10.4f}  {partial:10.4f}  {rand:10.4f}  {secs:7.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
