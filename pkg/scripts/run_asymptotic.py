"""Median n L_n / Lambda and allocation error of BA-MC against the baselines.

    python3 scripts/run_asymptotic.py --budgets 1000 10000 100000 --reps 50
"""

import argparse
import time

import numpy as np

from bamc.harness.config import load_instance
from bamc.policies import run_policy, theory_bounds


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instance", default="configs/fast_mixing_instance.json")
    p.add_argument("--budgets", type=int, nargs="+", default=[1000, 10000, 100000])
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--policies", nargs="+", default=["bamc", "uniform", "oracle-static"])
    args = p.parse_args()

    inst = load_instance(args.instance)
    lam = inst.lambda_total
    print(f"Lambda = {lam:.6g}, eta = {np.round(inst.eta, 4).tolist()}")
    print(f"{'policy':>14} {'n':>8} {'med nL/Lam':>11} {'q10':>7} {'q90':>7} {'max|T/n-eta|':>13} "
          f"{'2bLam/n / medL':>15} {'sec':>6}")
    for policy in args.policies:
        for n in args.budgets:
            t0 = time.perf_counter()
            runs = [run_policy(inst, policy, n, args.delta, args.seed + r) for r in range(args.reps)]
            nl = np.array([n * r.loss.weighted for r in runs]) / lam
            dev = np.median(np.abs(np.array([r.pulls / n for r in runs]) - inst.eta), axis=0).max()
            main_term = theory_bounds(inst, n, args.delta).thm2_main
            ratio = main_term / np.median([r.loss.weighted for r in runs])
            print(f"{policy:>14} {n:>8} {np.median(nl):>11.3f} {np.quantile(nl, 0.1):>7.3f} "
                  f"{np.quantile(nl, 0.9):>7.3f} {dev:>13.4f} {ratio:>15.2f} {time.perf_counter() - t0:>6.1f}")


if __name__ == "__main__":
    main()
