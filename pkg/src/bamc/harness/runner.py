"""Monte-Carlo replication of allocation runs over a (policy, budget) grid."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import BamcError
from ..policies import AllocationResult, Policy, run_policy, theory_bounds

log = logging.getLogger(__name__)


class RunFailed(BamcError, RuntimeError):
    def __init__(self, policy, n, seed, cause):
        super().__init__(f"run failed for policy={policy}, n={n}, seed={seed}: {cause}")
        self.cell = (policy, n, seed)


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    policy: str
    n: int
    replication: int
    seed: int
    per_chain_loss: tuple
    loss: float
    loss_unweighted: float
    loss_pseudo: Optional[float]
    fractions: tuple
    event_c: Optional[bool]

    @classmethod
    def from_result(cls, run_id: int, replication: int, r: AllocationResult) -> "RunRecord":
        rep = r.loss
        return cls(run_id, r.policy.value, r.n, replication, r.seed,
                   tuple(float(v) for v in rep.per_chain), rep.weighted, rep.unweighted, rep.pseudo,
                   tuple(float(v) for v in rep.fractions), r.event_c)


@dataclass
class ResultSet:
    config: object
    records: List[RunRecord] = field(default_factory=list)

    def cell(self, policy, n) -> List[RunRecord]:
        p = Policy.parse(policy).value
        return [r for r in self.records if r.policy == p and r.n == n]

    def cells(self):
        seen = []
        for r in self.records:
            if (r.policy, r.n) not in seen:
                seen.append((r.policy, r.n))
        return seen


def _one(task):
    instance, policy, n, delta, seed, mode, c, alpha = task
    try:
        return run_policy(instance, policy, n, delta, seed, snapshot_mode=mode, c=c, alpha=alpha)
    except Exception as e:  # noqa: BLE001 - re-raised with the failing cell attached
        raise RunFailed(policy.value, n, seed, e) from e


def run_experiment(config, jobs: int = 1) -> ResultSet:
    """Run ``replications x policies x budgets`` games.

    Replication ``r`` uses seed ``base_seed + r`` for every policy and budget,
    so policies see the same chain randomness.  Records come back in a fixed
    order regardless of ``jobs``.
    """
    tasks, keys = [], []
    for policy in config.policies:
        for n in config.budgets:
            for r in range(config.replications):
                seed = config.base_seed + r
                tasks.append((config.instance, policy, n, config.delta, seed, config.snapshot_mode.value,
                              config.c, config.alpha))
                keys.append(r)
    log.info("running %d games with %d worker(s)", len(tasks), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_one(t) for t in tasks]
    out = ResultSet(config)
    for i, (r, res) in enumerate(zip(keys, results)):
        out.records.append(RunRecord.from_result(i, r, res))
    return out


def _stats(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return {}
    return {"mean": float(v.mean()), "median": float(np.median(v)),
            "q10": float(np.quantile(v, 0.1)), "q90": float(np.quantile(v, 0.9)),
            "min": float(v.min()), "max": float(v.max())}


def summarize(results: ResultSet) -> dict:
    cfg = results.config
    inst = cfg.instance
    cells = []
    for policy, n in results.cells():
        recs = results.cell(policy, n)
        losses = [r.loss for r in recs]
        fracs = np.array([r.fractions for r in recs])
        flags = [r.event_c for r in recs if r.event_c is not None]
        tb = theory_bounds(inst, n, cfg.delta, cfg.c)
        cells.append({
            "policy": policy,
            "n": n,
            "replications": len(recs),
            "loss": _stats(losses),
            "n_loss": _stats([n * v for v in losses]),
            "allocation": {"median": np.median(fracs, axis=0).tolist(), "mean": fracs.mean(axis=0).tolist()},
            "event_c_frequency": (sum(flags) / len(flags)) if flags else None,
            "theory_bounds": {
                "beta": tb.beta,
                "thm1_bound": tb.thm1_bound,
                "thm1_second_order": tb.thm1_second_order,
                "thm2_main": tb.thm2_main,
                "thm2_excess": tb.thm2_excess,
                "C0": tb.C0,
                "asymptotic_target": tb.asymptotic_target,
            },
        })
    return {
        "instance": instance_summary(inst, cfg.delta),
        "config": {
            "instance_source": cfg.instance_source,
            "policies": [p.value for p in cfg.policies],
            "budgets": list(cfg.budgets),
            "delta": cfg.delta,
            "c": cfg.c,
            "alpha": cfg.smoothing,
            "replications": cfg.replications,
            "base_seed": cfg.base_seed,
            "snapshot_mode": cfg.snapshot_mode.value,
        },
        "cells": cells,
    }


def instance_summary(inst, delta: float) -> dict:
    from ..concentration import n_cutoff

    chains = []
    for P, a in inst.chains:
        chains.append({
            "gini_sum": float(a.gini.sum()),
            "stationary": a.stationary.tolist(),
            "min_stationary": a.min_stationary,
            "H": a.inv_stationary_sum,
            "reversible": a.reversible,
            "spectral_gap": a.spectral_gap,
            "pseudo_spectral_gap": a.pseudo_spectral_gap,
        })
    return {
        "K": inst.K,
        "S": inst.S,
        "Lambda": inst.lambda_total,
        "eta": inst.eta.tolist(),
        "n_cutoff": n_cutoff(inst, delta),
        "chains": chains,
    }
