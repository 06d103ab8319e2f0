"""Command line entry point: ``fairdiv select|oracle|bench|check-metric``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import bench as benchmod
from .core import (
    OVERLAPPING,
    BudgetExceededError,
    DataError,
    FairnessSpec,
    InfeasibleSpecError,
    InvariantViolation,
    validate_pseudometric,
)
from .io import dumps, ingest, result_record

log = logging.getLogger("fairdiv")

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_BUDGET, EXIT_INTERNAL = 0, 2, 3, 4, 5

ALGORITHMS = benchmod.ALGORITHMS + ("oracle",)


@dataclass
class RunConfig:
    input: str
    format: str = "points-csv"
    labels: str | None = None
    algorithm: str = "fair-flow"
    constraints: str = ""
    metric: str = "euclidean"
    search: str = "discrete"
    eps: float = 0.1
    seed: int = 0
    budget: int = 10**7
    m_cap: int = 4
    output: str | None = None


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return int(raw) if raw else default


def check_compatible(algorithm: str, ds, spec) -> None:
    overlapping = ds.mode == OVERLAPPING
    if algorithm in ("fair-swap", "fair-swap-overlap") and ds.m != 2:
        raise InfeasibleSpecError(f"{algorithm} requires exactly 2 groups, data has {ds.m}")
    if algorithm in ("fair-swap", "fair-gmm", "fair-flow", "fair-kcenter", "gmm") and overlapping:
        raise InfeasibleSpecError(f"{algorithm} requires disjoint groups; use the -overlap variants")
    if algorithm in ("fair-swap-overlap", "fair-flow-overlap") and not overlapping:
        raise InfeasibleSpecError(f"{algorithm} requires overlapping groups")


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Load, solve, and return ``(exit_code, record)``. Writes the record when ``cfg.output`` is set."""
    t0 = time.perf_counter()
    ds = ingest(cfg.input, cfg.format, cfg.metric, cfg.labels)
    spec = FairnessSpec.parse(ds, cfg.constraints)
    spec.validate(ds)
    if cfg.algorithm == "oracle":
        from .oracle import oracle_fair_maxmin

        res = oracle_fair_maxmin(ds, spec, cfg.budget)
        record = {
            "algorithm": "oracle",
            "diversity": res.opt_value if res.opt_value != float("inf") else "inf",
            "selected": [{"id": ds.ids[u], "groups": [ds.labels[g] for g in sorted(ds.memberships[u])]}
                         for u in res.witness],
            "per_group_counts": dict(zip(ds.labels, ds.counts(res.witness))),
            "enumerated": res.enumerated,
            "visited": res.visited,
            "gamma_used": None,
            "probes": 0,
            "aborted": False,
        }
    else:
        check_compatible(cfg.algorithm, ds, spec)
        if cfg.algorithm == "gmm":
            spec = FairnessSpec((spec.k_total,) + (0,) * (ds.m - 1), ds.mode)
        res = benchmod.solve(cfg.algorithm, ds, spec, cfg.seed, search=cfg.search, eps=cfg.eps,
                             budget=cfg.budget, m_cap=cfg.m_cap)
        record = result_record(ds, res)
    record["wall_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(dumps(record))
    return EXIT_OK, record


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="points CSV (id,groups,f1..fd) or square distance-matrix CSV")
    p.add_argument("--format", choices=("points-csv", "matrix-csv"), default="points-csv")
    p.add_argument("--labels", help="id,groups sidecar for --format matrix-csv")
    p.add_argument("--metric", choices=("euclidean", "manhattan", "precomputed"), default="euclidean")
    p.add_argument("--constraints", required=True, help='per-group counts, e.g. "urban=3,rural=2"')
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--output", "-o")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairdiv", description="Fair max-min diverse subset selection")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="run a selection algorithm")
    _common(sel)
    sel.add_argument("--algorithm", choices=benchmod.ALGORITHMS, default="fair-flow")
    sel.add_argument("--search", choices=("discrete", "continuous"), default="discrete")
    sel.add_argument("--eps", type=float, default=0.1)
    sel.add_argument("--seed", type=int, default=0)
    sel.add_argument("--m-cap", type=int, default=None)

    orc = sub.add_parser("oracle", help="exact optimum by enumeration (small inputs)")
    _common(orc)

    b = sub.add_parser("bench", help="approximation ratios against the oracle, or timing sweeps")
    b.add_argument("--algorithm", action="append", choices=benchmod.ALGORITHMS,
                   help="repeatable; default: every algorithm valid for --m")
    b.add_argument("--instances", type=int, default=50)
    b.add_argument("--n-min", type=int, default=4)
    b.add_argument("--n-max", type=int, default=12)
    b.add_argument("--m", type=int, default=2)
    b.add_argument("--k-max", type=int, default=5)
    b.add_argument("--overlap", type=float, default=0.3, help="extra-label probability for overlap algorithms")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--budget", type=int, default=None)
    b.add_argument("--timing-only", action="store_true")
    b.add_argument("--sizes", default="10000,100000")
    b.add_argument("--k", type=int, default=20)
    b.add_argument("--output", "-o")

    cm = sub.add_parser("check-metric", help="validate symmetry, zero diagonal and triangle inequality")
    cm.add_argument("input")
    cm.add_argument("--format", choices=("points-csv", "matrix-csv"), default="matrix-csv")
    cm.add_argument("--labels")
    cm.add_argument("--metric", choices=("euclidean", "manhattan", "precomputed"), default="euclidean")
    cm.add_argument("--tolerance", type=float, default=1e-9)
    cm.add_argument("--output", "-o")
    return parser


def _default_algorithms(m: int) -> list[str]:
    algs = ["fair-flow", "fair-gmm", "fair-kcenter"]
    if m == 2:
        algs = ["fair-swap", "fair-swap-overlap"] + algs
    if m >= 3:
        algs.append("fair-flow-overlap")
    return algs


def _bench(args, budget: int) -> dict:
    algorithms = args.algorithm or _default_algorithms(args.m)
    if args.timing_only:
        sizes = tuple(int(s) for s in args.sizes.split(","))
        out = {}
        for alg in algorithms:
            times = benchmod.timing_sweep(alg, sizes, k=args.k, m=args.m, seed=args.seed)
            out[alg] = {"seconds": {str(n): t for n, t in times.items()},
                        "ratio_largest_to_smallest": times[sizes[-1]] / times[sizes[0]]}
        return {"timing": out}
    reports = {}
    for alg in algorithms:
        overlap = args.overlap if alg.endswith("overlap") else 0.0
        rep = benchmod.run_ratio_suite(alg, args.instances, (args.n_min, args.n_max), args.m, args.k_max,
                                       overlap=overlap, suite_seed=args.seed, budget=budget)
        reports[alg] = rep.as_dict()
    return reports


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    budget = args.budget if getattr(args, "budget", None) is not None else _env_int("FAIRDIV_BUDGET", 10**7)
    try:
        if args.command == "check-metric":
            ds = ingest(args.input, args.format, args.metric, args.labels)
            rep = validate_pseudometric(ds, args.tolerance)
            out = {"ok": rep.ok, "exhaustive": rep.exhaustive, "asymmetric": rep.asymmetric,
                   "nonzero_diagonal": rep.nonzero_diagonal, "triangle": rep.triangle}
            _emit(out, args.output)
            return EXIT_OK
        if args.command == "bench":
            _emit(_bench(args, budget), args.output)
            return EXIT_OK
        m_cap = getattr(args, "m_cap", None)
        if m_cap is None:
            m_cap = _env_int("FAIRDIV_M_CAP", 4)
        cfg = RunConfig(
            input=args.input, format=args.format, labels=args.labels,
            algorithm="oracle" if args.command == "oracle" else args.algorithm,
            constraints=args.constraints, metric=args.metric,
            search=getattr(args, "search", "discrete"), eps=getattr(args, "eps", 0.1),
            seed=getattr(args, "seed", 0), budget=budget, m_cap=m_cap, output=args.output,
        )
        code, record = run(cfg)
        if not args.output:
            sys.stdout.write(dumps(record))
        return code
    except BudgetExceededError as exc:
        print(f"fairdiv: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InfeasibleSpecError as exc:
        print(f"fairdiv: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataError, OSError) as exc:
        print(f"fairdiv: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvariantViolation as exc:
        print(f"fairdiv: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _emit(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


if __name__ == "__main__":
    sys.exit(main())
