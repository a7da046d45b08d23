"""Command line entry point.

    bamc run --config <path> [--out <dir>] [--jobs <n>] [--seed <u64>]
    bamc analyze --instance <path> [--delta 0.05]
    bamc validate --instance <path>

Exit codes: 0 success, 2 configuration / input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..errors import BamcError, ParseError, SchemaError
from .config import load_config, load_instance
from .report import emit_report
from .runner import instance_summary, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("bamc")


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bamc", description="Active bandit allocation for Markov chains")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid and write reports")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--jobs", type=_positive, default=1)
    run.add_argument("--seed", type=_u64, help="base seed (overrides the config)")

    analyze = sub.add_parser("analyze", help="print instance quantities")
    analyze.add_argument("--instance", required=True)
    analyze.add_argument("--delta", type=float, default=0.05)

    validate = sub.add_parser("validate", help="check an instance file")
    validate.add_argument("--instance", required=True)
    return parser


def _run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out_dir = args.out or cfg.out_dir
    results = run_experiment(cfg, jobs=args.jobs)
    for path in emit_report(results, cfg.formats, out_dir):
        print(path)
    return EXIT_OK


def _analyze(args) -> int:
    if not 0 < args.delta < 1:
        print("error: --delta must lie in (0, 1)", file=sys.stderr)
        return EXIT_CONFIG
    inst = load_instance(args.instance)
    summary = instance_summary(inst, args.delta)
    print(f"K = {summary['K']}, S = {summary['S']}")
    print(f"Lambda = {summary['Lambda']:.6g}")
    print("eta = " + ", ".join(f"{e:.6g}" for e in summary["eta"]))
    for k, ch in enumerate(summary["chains"]):
        gap = f"gamma = {ch['spectral_gap']:.6g}" if ch["reversible"] else "non-reversible"
        print(f"chain {k + 1}: sum G = {ch['gini_sum']:.6g}, H = {ch['H']:.6g}, "
              f"pi_min = {ch['min_stationary']:.6g}, {gap}, gamma_ps = {ch['pseudo_spectral_gap']:.6g}")
    print(f"n_cutoff(delta={args.delta}) = {summary['n_cutoff']}")
    return EXIT_OK


def _validate(args) -> int:
    inst = load_instance(args.instance)
    print(f"ok: {inst.K} ergodic chain(s) on {inst.S} states")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _run, "analyze": _analyze, "validate": _validate}[args.command]
    try:
        return handler(args)
    except (ParseError, SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BamcError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
