"""Report files.

``runs.csv`` column order (fixed)::

    run_id, policy, n, seed, L_1..L_K, L, L_prime, L_pseudo, frac_1..frac_K, event_c

``curves.csv`` (long format, one row per run)::

    policy, n, replication, seed, n_loss, Lambda

``summary.json`` holds the instance summary and per-(policy, n) aggregates
with the closed-form bounds.
"""

from __future__ import annotations

import csv
import json
import os

from .runner import ResultSet, summarize


def runs_header(K: int):
    return (["run_id", "policy", "n", "seed"] + [f"L_{k + 1}" for k in range(K)]
            + ["L", "L_prime", "L_pseudo"] + [f"frac_{k + 1}" for k in range(K)] + ["event_c"])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_runs_csv(results: ResultSet, path: str):
    K = results.config.instance.K
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(runs_header(K))
        for r in results.records:
            row = [r.run_id, r.policy, r.n, r.seed, *r.per_chain_loss, r.loss, r.loss_unweighted,
                   r.loss_pseudo, *r.fractions, r.event_c]
            w.writerow([_fmt(v) for v in row])


def write_curves_csv(results: ResultSet, path: str):
    lam = results.config.instance.lambda_total
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "n", "replication", "seed", "n_loss", "Lambda"])
        for r in results.records:
            w.writerow([_fmt(v) for v in (r.policy, r.n, r.replication, r.seed, r.n * r.loss, lam)])


def emit_report(results: ResultSet, formats=("csv", "json", "long"), out_dir: str = "results"):
    """Write the requested files into ``out_dir``; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        p = os.path.join(out_dir, "runs.csv")
        write_runs_csv(results, p)
        written.append(p)
    if "long" in formats:
        p = os.path.join(out_dir, "curves.csv")
        write_curves_csv(results, p)
        written.append(p)
    if "json" in formats:
        p = os.path.join(out_dir, "summary.json")
        with open(p, "w", encoding="utf-8") as fh:
            json.dump(summarize(results), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(p)
    return written
