"""Exact solvers by enumeration, used as ground truth on small instances."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import DISJOINT, BudgetExceededError, Dataset, FairnessSpec, n_choose
from .disjoint import exhaustive_maxmin

DEFAULT_BUDGET = 10**7


@dataclass(frozen=True)
class OracleResult:
    """``enumerated`` counts every feasible subset; ``visited`` those the pruned search evaluated."""

    opt_value: float
    witness: tuple[int, ...]
    enumerated: int
    visited: int = 0


def _disjoint_count(ds: Dataset, spec: FairnessSpec) -> int:
    total = 1
    for size, k in zip(ds.group_sizes(), spec.counts):
        total *= n_choose(size, k)
    return total


def _overlap_count(ds: Dataset, spec: FairnessSpec) -> int:
    return sum(n_choose(ds.n, s) for s in range(1, spec.k_total + 1))


def count_feasible_overlap(ds: Dataset, spec: FairnessSpec) -> int:
    """Subsets of at most ``k_total`` elements with at least ``k_i`` members of every group."""
    need = spec.counts
    states = {(0, (0,) * ds.m): 1}
    for mem in ds.memberships:
        nxt = dict(states)
        for (size, have), ways in states.items():
            if size == spec.k_total:
                continue
            key = (size + 1, tuple(min(h + (g in mem), k) for g, (h, k) in enumerate(zip(have, need))))
            nxt[key] = nxt.get(key, 0) + ways
        states = nxt
    return sum(ways for (size, have), ways in states.items() if size > 0 and have == tuple(need))


def oracle_fair_maxmin(ds: Dataset, spec: FairnessSpec, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Maximum diversity over every fair subset.

    Disjoint data: exactly ``k_i`` per group. Overlapping data: any subset of
    at most ``sum(k_i)`` elements with at least ``k_i`` members of each group.
    """
    spec.validate(ds)
    everything = np.arange(ds.n)
    dist = ds.pairwise(everything)
    if ds.mode == DISJOINT:
        count = _disjoint_count(ds, spec)
        if count > budget:
            raise BudgetExceededError(f"oracle would enumerate {count} subsets, budget is {budget}", count)
        pools = [ds.members(g).tolist() for g in range(ds.m)]
        value, best, visited = exhaustive_maxmin(dist, pools, list(spec.counts))
        return OracleResult(value, tuple(best), count, visited)

    count = _overlap_count(ds, spec)
    if count > budget:
        raise BudgetExceededError(f"oracle would enumerate up to {count} subsets, budget is {budget}", count)
    need = list(spec.counts)
    mem = [sorted(s) for s in ds.memberships]
    best_val = -math.inf
    best: tuple[int, ...] = ()
    visited = 0
    chosen: list[int] = []
    have = [0] * ds.m

    # depth-first in lexicographic order; a feasible set ends its branch since
    # adding points can only lower the diversity
    def rec(start: int, cur: float):
        nonlocal best_val, best, visited
        if all(h >= k for h, k in zip(have, need)):
            visited += 1
            if cur > best_val:
                best_val, best = cur, tuple(chosen)
            return
        if len(chosen) == spec.k_total:
            return
        for u in range(start, ds.n):
            nd = min(cur, float(dist[u, chosen].min())) if chosen else math.inf
            if nd <= best_val:
                continue
            chosen.append(u)
            for g in mem[u]:
                have[g] += 1
            rec(u + 1, nd)
            for g in mem[u]:
                have[g] -= 1
            chosen.pop()

    rec(0, math.inf)
    return OracleResult(best_val, best, count_feasible_overlap(ds, spec), visited)


def oracle_fair_kcenter(ds: Dataset, spec: FairnessSpec, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Smallest covering radius over every center set with exactly ``k_i`` centers per group."""
    spec.validate(ds)
    count = _disjoint_count(ds, spec)
    if count > budget:
        raise BudgetExceededError(f"oracle would enumerate {count} center sets, budget is {budget}", count)
    dist = ds.pairwise(np.arange(ds.n))
    per_group = [list(itertools.combinations(ds.members(g).tolist(), k)) for g, k in enumerate(spec.counts)]
    best_val = math.inf
    best: tuple[int, ...] = ()
    visited = 0
    for parts in itertools.product(*per_group):
        centers = [u for part in parts for u in part]
        visited += 1
        r = float(dist[centers].min(axis=0).max())
        if r < best_val:
            best_val, best = r, tuple(centers)
    return OracleResult(best_val, best, visited, visited)
