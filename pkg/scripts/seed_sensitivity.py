"""How often is the median n L_n nonincreasing over the budget grid?

Repeats the R-replication median on disjoint seed blocks.

    python3 scripts/seed_sensitivity.py --blocks 6 --reps 50
"""

import argparse

import numpy as np

from bamc.harness.config import load_instance
from bamc.policies import run_policy


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instance", default="configs/fast_mixing_instance.json")
    p.add_argument("--budgets", type=int, nargs="+", default=[1000, 10000, 100000])
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--blocks", type=int, default=6)
    p.add_argument("--delta", type=float, default=0.05)
    args = p.parse_args()

    inst = load_instance(args.instance)
    lam = inst.lambda_total
    monotone = 0
    for b in range(args.blocks):
        base = 1000 * b
        med = [np.median([n * run_policy(inst, "bamc", n, args.delta, base + r).loss.weighted
                          for r in range(args.reps)]) / lam for n in args.budgets]
        ok = all(x >= y for x, y in zip(med, med[1:]))
        monotone += ok
        print(f"seeds {base}..{base + args.reps - 1}: " + " ".join(f"{m:.3f}" for m in med)
              + ("  nonincreasing" if ok else ""), flush=True)
    print(f"nonincreasing in {monotone}/{args.blocks} blocks")


if __name__ == "__main__":
    main()
