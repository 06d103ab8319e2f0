"""Random instances and the approximation-ratio / scaling harness."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .clustering import fair_kcenter
from .core import DISJOINT, OVERLAPPING, Dataset, FairnessSpec, Selection
from .disjoint import fair_gmm, fair_swap
from .flow import fair_flow
from .gmm import gmm
from .oracle import oracle_fair_kcenter, oracle_fair_maxmin
from .overlap import fair_flow_overlap, fair_swap_overlap, sperner_bound

# tolerance on every ratio check
RATIO_TOL = 1e-9


def random_instance(
    rng: np.random.Generator,
    n: int,
    m: int,
    dim: int = 2,
    overlap: float = 0.0,
    clustered: bool = False,
) -> Dataset:
    """Uniform (or clustered) points in the unit square with random group labels.

    Every group gets at least one element. With ``overlap > 0`` each element
    picks up each extra label with that probability.
    """
    if n < m:
        raise ValueError("need at least one element per group")
    if clustered:
        centers = rng.uniform(0, 1, size=(max(2, m), dim))
        pts = centers[rng.integers(len(centers), size=n)] + rng.normal(0, 0.03, size=(n, dim))
    else:
        pts = rng.uniform(0, 1, size=(n, dim))
    base = np.concatenate([np.arange(m), rng.integers(0, m, size=n - m)])
    rng.shuffle(base)
    labels = [f"g{i}" for i in range(m)]
    groups = []
    for u in range(n):
        mem = {int(base[u])}
        if overlap > 0:
            for g in range(m):
                if rng.random() < overlap:
                    mem.add(g)
        groups.append([labels[g] for g in sorted(mem)])
    mode = OVERLAPPING if overlap > 0 else DISJOINT
    return Dataset.from_points(pts, groups, metric="euclidean", mode=mode, labels=labels)


def random_counts(rng: np.random.Generator, ds: Dataset, k_max: int) -> FairnessSpec:
    """Random feasible counts with ``1 <= sum <= k_max``."""
    sizes = ds.group_sizes()
    while True:
        ks = [int(rng.integers(0, min(s, k_max) + 1)) for s in sizes]
        if 1 <= sum(ks) <= k_max:
            return FairnessSpec(tuple(ks), ds.mode)


ALGORITHMS = ("gmm", "fair-swap", "fair-gmm", "fair-flow", "fair-swap-overlap", "fair-flow-overlap",
              "fair-kcenter")


def bound(algorithm: str, m: int) -> float:
    """Guaranteed ratio (achieved/opt for max-min, opt/achieved for k-center)."""
    return {
        "gmm": 0.5,
        "fair-swap": 0.25,
        "fair-gmm": 0.2,
        "fair-flow": 1 / (3 * m - 1),
        "fair-swap-overlap": 0.25,
        "fair-flow-overlap": 1 / (3 * sperner_bound(m) - 1),
        "fair-kcenter": 1 / 3,
    }[algorithm]


def solve(algorithm: str, ds: Dataset, spec: FairnessSpec, seed: int, search: str = "discrete",
          eps: float = 0.1, budget: int = 10**7, m_cap: int = 4):
    if algorithm == "gmm":
        st = gmm(ds, np.arange(ds.n), (), spec.k_total, seed=seed)
        return Selection.build(ds, st.selected, "gmm", diagnostics={"distance_evals": st.evals})
    if algorithm == "fair-swap":
        return fair_swap(ds, spec, seed=seed)
    if algorithm == "fair-gmm":
        return fair_gmm(ds, spec, seed=seed, budget=budget)
    if algorithm == "fair-flow":
        return fair_flow(ds, spec, search=search, eps=eps, seed=seed)
    if algorithm == "fair-swap-overlap":
        return fair_swap_overlap(ds, spec, seed=seed)
    if algorithm == "fair-flow-overlap":
        return fair_flow_overlap(ds, spec, search=search, eps=eps, seed=seed, m_cap=m_cap)
    if algorithm == "fair-kcenter":
        return fair_kcenter(ds, spec, search=search, eps=eps, seed=seed)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def ratio(algorithm: str, achieved: float, opt: float) -> float:
    """Quality ratio oriented so that larger is better and the bound is a lower limit."""
    if algorithm == "fair-kcenter":
        if achieved == 0:
            return 1.0
        return opt / achieved
    if opt == 0 or (math.isinf(opt) and math.isinf(achieved)):
        return 1.0
    return achieved / opt


@dataclass
class BenchRecord:
    n: int
    m: int
    k: list[int]
    algorithm: str
    achieved: float
    opt: float | None
    ratio: float | None
    bound: float
    probes: int
    wall_ms: float
    error: str | None = None


@dataclass
class BenchReport:
    records: list[BenchRecord] = field(default_factory=list)

    def aggregates(self) -> dict:
        out: dict[str, dict] = {}
        for r in self.records:
            a = out.setdefault(r.algorithm, {"instances": 0, "ratios": [], "errors": 0, "violations": 0})
            a["instances"] += 1
            if r.error:
                a["errors"] += 1
            if r.ratio is not None:
                a["ratios"].append(r.ratio)
                if r.ratio < r.bound - RATIO_TOL:
                    a["violations"] += 1
        for a in out.values():
            rs = a.pop("ratios")
            a["min_ratio"] = min(rs) if rs else None
            a["mean_ratio"] = float(np.mean(rs)) if rs else None
        return out

    def as_dict(self) -> dict:
        return {"records": [asdict(r) for r in self.records], "aggregates": self.aggregates()}


def instance_seed(suite_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([suite_seed, index]).generate_state(1)[0])


def run_ratio_suite(algorithm: str, count: int, n_range=(4, 12), m: int = 2, k_max: int = 5,
                    overlap: float = 0.0, suite_seed: int = 0, budget: int = 10**7) -> BenchReport:
    """Random small instances, each solved and compared against the exact optimum."""
    report = BenchReport()
    for idx in range(count):
        seed = instance_seed(suite_seed, idx)
        rng = np.random.default_rng(seed)
        n = int(rng.integers(max(n_range[0], m), n_range[1] + 1))
        ds = random_instance(rng, n, m, overlap=overlap)
        spec = random_counts(rng, ds, k_max)
        if algorithm == "gmm":
            spec = FairnessSpec((spec.k_total,) + (0,) * (ds.m - 1), ds.mode)
        report.records.append(evaluate(algorithm, ds, spec, seed, budget))
    return report


def evaluate(algorithm: str, ds: Dataset, spec: FairnessSpec, seed: int, budget: int = 10**7) -> BenchRecord:
    t0 = time.perf_counter()
    try:
        res = solve(algorithm, ds, spec, seed, budget=budget)
    except Exception as exc:  # budget refusals and the like are reported per instance
        return BenchRecord(ds.n, ds.m, list(spec.counts), algorithm, math.nan, None, None,
                           bound(algorithm, ds.m), 0, 0.0, error=f"{type(exc).__name__}: {exc}")
    wall = (time.perf_counter() - t0) * 1000
    if algorithm == "fair-kcenter":
        achieved = res.radius
        opt = oracle_fair_kcenter(ds, spec, budget).opt_value
    else:
        achieved = res.diversity
        if algorithm == "gmm":
            # the unconstrained optimum: one pseudo-group holding everything
            whole = Dataset.from_points(ds.points, ["all"] * ds.n, metric=ds.metric)
            opt = oracle_fair_maxmin(whole, FairnessSpec((spec.k_total,)), budget).opt_value
        else:
            opt = oracle_fair_maxmin(ds, spec, budget).opt_value
    return BenchRecord(ds.n, ds.m, list(spec.counts), algorithm, achieved, opt,
                       ratio(algorithm, achieved, opt), bound(algorithm, ds.m), res.probes, wall)


def timing_sweep(algorithm: str, sizes=(10_000, 100_000), k: int = 20, m: int = 3, seed: int = 0,
                 repeats: int = 3) -> dict:
    """Best-of-``repeats`` wall time per size at fixed ``k`` and ``m``."""
    out = {}
    for n in sizes:
        rng = np.random.default_rng([seed, n])
        ds = random_instance(rng, n, m)
        base, rem = divmod(k, m)
        spec = FairnessSpec(tuple(base + (1 if i < rem else 0) for i in range(m)), ds.mode)
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            solve(algorithm, ds, spec, seed)
            best = min(best, time.perf_counter() - t0)
        out[n] = best
    return out
