"""Fair k-center clustering through the same assignment-flow reduction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DISJOINT, Dataset, FairnessSpec, InvariantViolation, require_mode
from .flow import assignment_network, max_flow
from .gmm import gmm

RADIUS_RTOL = 1e-9


@dataclass
class ClusterResult:
    centers: tuple[int, ...]
    radius: float
    per_group_counts: tuple[int, ...]
    gamma_used: float | None = None
    aborted: bool = False
    probes: int = 0
    algorithm: str = "fair-kcenter"
    diagnostics: dict = field(default_factory=dict)


@dataclass
class _Skeleton:
    """Guess-independent part: GMM order of k+1 points and nearest point of each group to each."""

    picks: list[int]
    gains: list[float]
    nearest: list[list[int]]  # nearest[j][g]
    near_dist: list[list[float]]
    evals: int


def _skeleton(ds: Dataset, k: int, seed: int | None) -> _Skeleton:
    everything = np.arange(ds.n)
    st = gmm(ds, everything, (), k + 1, seed=seed)
    nearest, near_dist = [], []
    evals = st.evals
    for y in st.selected:
        row, drow = [], []
        for g in range(ds.m):
            mem = ds.members(g)
            d = ds.dists(y, mem)
            evals += len(mem)
            j = int(np.argmin(d))  # members are sorted, so ties go to the smallest id
            row.append(int(mem[j]))
            drow.append(float(d[j]))
        nearest.append(row)
        near_dist.append(drow)
    return _Skeleton(list(st.selected), list(st.gains), nearest, near_dist, evals)


def _result(ds, centers, gamma, diag, aborted=False) -> ClusterResult:
    if aborted:
        return ClusterResult((), math.nan, (0,) * ds.m, gamma_used=gamma, aborted=True, probes=1,
                             diagnostics=diag)
    centers = tuple(int(c) for c in centers)
    return ClusterResult(centers, ds.radius(centers), tuple(ds.counts(centers)), gamma_used=gamma,
                         probes=1, diagnostics=diag)


def _probe(ds: Dataset, spec: FairnessSpec, sk: _Skeleton, gamma: float) -> ClusterResult:
    k = spec.k_total
    diag: dict = {"gamma": gamma}
    if sk.gains[k] > 2 * gamma:
        diag["abort"] = "separated"
        return _result(ds, (), gamma, diag, aborted=True)
    t = next(j for j in range(1, k + 1) if sk.gains[j] <= 2 * gamma)
    if ds.radius(sk.picks[:t]) > 2 * gamma * (1 + RADIUS_RTOL):
        raise InvariantViolation("an element is farther than 2 * gamma from the truncated prefix")
    incidence = []
    for j in range(t):
        for g in range(ds.m):
            if sk.near_dist[j][g] <= gamma:
                incidence.append((g, j))
    asg = assignment_network(list(spec.counts), t, incidence)
    value, flow = max_flow(asg.net)
    diag.update(t=t, flow=value, networks_checked=1)
    if value < t:
        diag["abort"] = "flow"
        return _result(ds, (), gamma, diag, aborted=True)
    centers = [sk.nearest[j][g] for (g, j), e in asg.pair_edges.items() if flow[e] > 0]
    if len(set(centers)) != len(centers):
        raise InvariantViolation("two cluster blocks chose the same center")
    for (g, j), e in asg.pair_edges.items():
        if flow[e] > 0 and ds.distance(sk.nearest[j][g], sk.picks[j]) > gamma:
            raise InvariantViolation("a chosen center is farther than gamma from its block point")
    centers = _pad(ds, spec, centers)
    res = _result(ds, centers, gamma, diag)
    if res.per_group_counts != tuple(spec.counts):
        raise InvariantViolation(f"fair-kcenter counts {res.per_group_counts} != {spec.counts}")
    if res.radius > 3 * gamma * (1 + RADIUS_RTOL):
        raise InvariantViolation(f"fair-kcenter radius {res.radius} > 3 * gamma = {3 * gamma}")
    return res


def _pad(ds: Dataset, spec: FairnessSpec, centers: list[int]) -> list[int]:
    # missing centers of each group: farthest-first from everything chosen so far
    centers = list(centers)
    have = ds.counts(centers)
    for g in range(ds.m):
        need = spec.counts[g] - have[g]
        if need <= 0:
            continue
        taken = set(centers)
        pool = [u for u in ds.members(g).tolist() if u not in taken]
        centers.extend(gmm(ds, pool, centers, need).selected)
    return centers


def fair_kcenter_probe(ds: Dataset, spec: FairnessSpec, gamma: float, seed: int | None = 0) -> ClusterResult:
    """Evaluate one radius guess. A non-aborted result has radius at most ``3 * gamma``."""
    require_mode(ds, DISJOINT, "fair-kcenter")
    spec.validate(ds)
    if ds.n <= spec.k_total:
        return _result(ds, range(ds.n), gamma, {"forced": True})
    return _probe(ds, spec, _skeleton(ds, spec.k_total, seed), gamma)


def fair_kcenter(ds: Dataset, spec: FairnessSpec, search: str = "discrete", eps: float = 0.1,
                 seed: int | None = 0) -> ClusterResult:
    """Fair k-center with radius at most three times the optimum.

    Discrete search probes every distance among the GMM points and their
    per-group nearest points, and half of each (the separation test compares
    against ``2 * gamma``), looking for the smallest guess that succeeds.
    """
    require_mode(ds, DISJOINT, "fair-kcenter")
    spec.validate(ds)
    if ds.n <= spec.k_total:
        res = _result(ds, range(ds.n), 0.0, {"forced": True})
        res.probes = 0
        return res
    sk = _skeleton(ds, spec.k_total, seed)
    pool = sorted(set(sk.picks) | {u for row in sk.nearest for u in row})
    d = ds.pairwise(pool)
    values = np.unique(d[np.triu_indices(len(pool), k=1)])
    if search == "discrete":
        cand = {0.0}
        for v in values.tolist():
            cand.add(v)
            cand.add(v / 2)
        gammas = sorted(cand)
    elif search == "continuous":
        if not eps > 0:
            raise ValueError("eps must be positive")
        pos = values[values > 0]
        gammas = [0.0]
        if pos.size:
            lo, hi = float(pos.min()) / 2, float(pos.max())
            steps = math.ceil(math.log(hi / lo) / math.log1p(eps))
            gammas += [lo * (1 + eps) ** i for i in range(steps + 1)]
    else:
        raise ValueError(f"unknown search mode {search!r}")

    # success is expected at large guesses: search the descending list for the last success
    rev = gammas[::-1]
    results: dict[int, ClusterResult] = {}

    def run(i):
        if i not in results:
            results[i] = _probe(ds, spec, sk, rev[i])
        return results[i]

    lo, hi = 0, len(rev) - 1
    if run(lo).aborted:
        raise InvariantViolation("fair-kcenter aborted at the largest guess")
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if run(mid).aborted:
            hi = mid - 1
        else:
            lo = mid
    best = None
    for i in sorted(results):
        r = results[i]
        if r.aborted:
            continue
        if best is None or r.radius < best.radius or (r.radius == best.radius and r.gamma_used < best.gamma_used):
            best = r
    ok = [i for i, r in results.items() if not r.aborted]
    non_monotone = [rev[i] for i, r in results.items() if r.aborted and i < max(ok)]
    best.probes = len(results)
    best.diagnostics = {**best.diagnostics, "search": search, "candidate_guesses": len(gammas),
                        "smallest_ok_gamma": rev[lo], "non_monotone_gammas": sorted(non_monotone),
                        "networks_checked": sum(r.diagnostics.get("networks_checked", 0)
                                                for r in results.values()),
                        "distance_evals": sk.evals}
    return best
