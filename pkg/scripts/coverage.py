"""Event-C coverage and the index lower bound on a single known chain.

    python3 scripts/coverage.py --n 10000 --delta 0.1 --seeds 500
"""

import argparse
import math
import time

import numpy as np

from bamc.markov import build_instance
from bamc.policies import run_policy

DEFAULT_CHAIN = [[0.5, 0.3, 0.2], [0.2, 0.6, 0.2], [0.25, 0.25, 0.5]]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seeds", type=int, default=500)
    p.add_argument("--mode", choices=["full", "checkpoints"], default="full")
    args = p.parse_args()

    inst = build_instance([np.array(DEFAULT_CHAIN)])
    t0 = time.perf_counter()
    runs = [run_policy(inst, "bamc", args.n, args.delta, s, snapshot_mode=args.mode) for s in range(args.seeds)]
    elapsed = time.perf_counter() - t0
    miss = sum(not r.event_c for r in runs) / len(runs)
    slack = 3 * math.sqrt(args.delta * (1 - args.delta) / len(runs))
    held = [r for r in runs if r.event_c]
    print(f"event C violated in {miss:.3f} of runs (delta + 3 sigma = {args.delta + slack:.3f})")
    print(f"index lower-bound violations where C holds: {sum(r.index_lower_violations for r in held)}")
    print(f"runs with b < L_k at some snapshot: {sum(r.loss_ucb_violated for r in runs)}")
    print(f"{len(runs)} runs in {elapsed:.1f}s")


if __name__ == "__main__":
    main()
