"""Command-line entry point.

Subcommands: train-experts, run, sweep, report, store. Exit codes:
0 success, 2 configuration error, 3 contract violation, 4 missing expert,
5 store error, 6 other package error, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import ScenarioConfig, load_config
from .errors import (
    ConfigError,
    ContractViolation,
    MissingExpertError,
    SliceTrlError,
    StoreError,
)
from .runner import ALGORITHMS, run_algorithms, sweep, train_and_store_experts
from .store import list_experts, load_expert

EXIT_CODES = (
    (ConfigError, 2),
    (ContractViolation, 3),
    (MissingExpertError, 4),
    (StoreError, 5),
    (SliceTrlError, 6),
)


def _add_common(p):
    p.add_argument("--config", help="key=value scenario file (defaults when omitted)")
    p.add_argument("--seed-base", type=int, default=None, help="override the config's rng_seed")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--store", default="store", help="knowledge-store directory")
    p.add_argument("--jobs", type=int, default=None, help="parallel runs (default: cpu count)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slicetrl")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-experts", help="train radio + compute experts into the store")
    _add_common(p)
    p.add_argument("--ttis", type=int, default=None, help="training TTIs per expert")

    p = sub.add_parser("run", help="run strategies at the configured operating point")
    _add_common(p)
    p.add_argument("--algo", default="all", help=f"one of {ALGORITHMS} or 'all'")

    p = sub.add_parser("sweep", help="sweep URLLC load or MEC capacity")
    _add_common(p)
    p.add_argument("--algo", default="all")
    p.add_argument("--axis", required=True, choices=("urllc_load", "mec_capacity"))
    p.add_argument("--points", required=True, help="comma-separated values, e.g. 1,2,3")

    p = sub.add_parser("report", help="render figures from a results directory")
    p.add_argument("--out", default="results")

    p = sub.add_parser("store", help="inspect the knowledge store")
    p.add_argument("action", choices=("list",))
    p.add_argument("--store", default="store")
    return ap


def _load_cfg(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if getattr(args, "seed_base", None) is not None:
        cfg = cfg.with_updates(rng_seed=args.seed_base)
    return cfg


def _algos(arg: str):
    if arg == "all":
        return list(ALGORITHMS)
    if arg not in ALGORITHMS:
        raise ContractViolation(f"--algo must be one of {ALGORITHMS} or 'all', got {arg!r}")
    return [arg]


def _dispatch(args) -> int:
    if args.command == "train-experts":
        cfg = _load_cfg(args)
        ids = train_and_store_experts(cfg, args.store, n_ttis=args.ttis)
        for task_id in ids:
            print(f"stored expert {task_id}")
        return 0

    if args.command == "run":
        cfg = _load_cfg(args)
        per_algo = run_algorithms(
            cfg, _algos(args.algo), args.out, store_path=args.store,
            seed_base=args.seed_base, n_jobs=args.jobs,
        )
        for algo, records in per_algo.items():
            finals = [r.metrics()["final_ma_reward"] for r in records]
            print(f"{algo}: {len(records)} runs, final MA reward mean {sum(finals) / len(finals):.4f}")
        print(f"CSVs written to {args.out}")
        return 0

    if args.command == "sweep":
        cfg = _load_cfg(args)
        points = [float(x) for x in args.points.split(",") if x.strip() != ""]
        rows = sweep(
            cfg, args.axis, points, _algos(args.algo), args.out,
            store_path=args.store, seed_base=args.seed_base, n_jobs=args.jobs,
        )
        print(f"{len(rows)} sweep rows written to {args.out}/sweep_{args.axis}.csv")
        return 0

    if args.command == "report":
        from .reports import make_report

        for path in make_report(args.out):
            print(f"wrote {path}")
        return 0

    if args.command == "store":
        ids = list_experts(args.store)
        if not ids:
            print("store is empty")
        for task_id in ids:
            art = load_expert(args.store, task_id)
            print(
                f"{task_id}: dims={','.join(art.resource_dims)} "
                f"signature={art.signature} grid={art.action_grid} "
                f"reward={art.final_mean_reward:.4f} ttis={art.train_ttis}"
            )
        return 0

    raise ContractViolation(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SliceTrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for klass, code in EXIT_CODES:
            if isinstance(exc, klass):
                return code
        return 6


if __name__ == "__main__":
    sys.exit(main())
