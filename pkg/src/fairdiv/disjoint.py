"""Swap-based selection for two groups and small-k exhaustive selection over GMM pools."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DISJOINT,
    BudgetExceededError,
    Dataset,
    FairnessSpec,
    InfeasibleSpecError,
    InvariantViolation,
    Selection,
    check_exact_counts,
    n_choose,
    require_mode,
)
from .gmm import gmm

DEFAULT_BUDGET = 10**7


@dataclass
class SwapTrace:
    color_blind: list[int]
    under: int
    over: int
    extras: list[int] = field(default_factory=list)
    removed: list[int] = field(default_factory=list)
    evals: int = 0


def swap_select(ds: Dataset, pools, targets, seed: int | None = 0, first: int | None = None):
    """Two-group swap on explicit pools.

    ``pools`` are the element arrays of the two groups (disjoint), ``targets``
    the required counts. Returns ``(chosen, trace)``.
    """
    pools = [np.asarray(p, dtype=np.intp) for p in pools]
    targets = [int(t) for t in targets]
    k = sum(targets)
    if k == 0:
        return [], SwapTrace([], 0, 1)
    universe = np.concatenate(pools)
    blind = gmm(ds, universe, (), k, seed=seed, first=first)
    in_pool = [set(p.tolist()) for p in pools]
    s = [[u for u in blind.selected if u in in_pool[i]] for i in range(2)]

    # the group with the larger deficit is under-satisfied
    deficit = [targets[i] - len(s[i]) for i in range(2)]
    under = 0 if deficit[0] >= deficit[1] else 1
    over = 1 - under
    trace = SwapTrace(list(blind.selected), under, over, evals=blind.evals)
    need = deficit[under]
    if need <= 0:
        return list(blind.selected), trace

    extra = gmm(ds, pools[under], s[under], need, seed=seed)
    trace.evals += extra.evals
    trace.extras = list(extra.selected)
    if len(trace.extras) != need:
        raise InvariantViolation("not enough points to rebalance the under-satisfied group")
    kept_over = list(s[over])
    for e in trace.extras:
        d = ds.dists(e, kept_over)
        trace.evals += len(kept_over)
        # np.argmin takes the first minimum; scan in id order for the tie-break
        order = np.argsort(np.asarray(kept_over), kind="stable")
        j = order[int(np.argmin(d[order]))]
        trace.removed.append(kept_over.pop(int(j)))
    chosen = s[under] + trace.extras + kept_over
    return chosen, trace


def fair_swap(ds: Dataset, spec: FairnessSpec, seed: int | None = 0, first: int | None = None) -> Selection:
    """Two-group fair selection: colour-blind GMM, then swap in points of the short group.

    Each extra point of the under-represented group evicts its nearest
    remaining point of the over-represented group, in the order the extras
    were picked. Guarantees at least a quarter of the optimal fair diversity.
    """
    require_mode(ds, DISJOINT, "fair-swap")
    if ds.m != 2:
        raise InfeasibleSpecError(f"fair-swap needs exactly 2 groups, got {ds.m}")
    spec.validate(ds)
    chosen, trace = swap_select(ds, [ds.members(0), ds.members(1)], spec.counts, seed=seed, first=first)
    sel = Selection.build(
        ds,
        chosen,
        "fair-swap",
        diagnostics={
            "color_blind": trace.color_blind,
            "under": ds.labels[trace.under],
            "extras": trace.extras,
            "removed": trace.removed,
            "distance_evals": trace.evals,
        },
    )
    check_exact_counts(ds, spec, sel)
    return sel


def exhaustive_maxmin(dist: np.ndarray, pools: list[list[int]], targets: list[int]):
    """Branch and bound over per-pool combinations maximizing the min pairwise distance.

    ``dist`` indexes the local positions listed in ``pools``. Returns
    ``(best_value, best_positions, visited)``; candidates are enumerated
    pool by pool in lexicographic order, so ties keep the first set found.
    """
    slots = [(g, pools[g]) for g in range(len(pools)) if targets[g] > 0]
    total = sum(targets)
    best_val = -math.inf
    best: list[int] | None = None
    visited = 0
    chosen: list[int] = []

    def rec(slot: int, start: int, left: int, cur: float):
        nonlocal best_val, best, visited
        if left == 0:
            slot, start = slot + 1, 0
            if slot == len(slots):
                visited += 1
                if cur > best_val:
                    best_val, best = cur, list(chosen)
                return
            left = targets[slots[slot][0]]
        pool = slots[slot][1]
        for i in range(start, len(pool) - left + 1):
            p = pool[i]
            nd = cur
            if chosen:
                nd = min(cur, float(dist[p, chosen].min()))
            if nd <= best_val:
                continue
            chosen.append(p)
            rec(slot, i + 1, left - 1, nd)
            chosen.pop()

    if total == 0:
        return math.inf, [], 0
    rec(0, 0, targets[slots[0][0]], math.inf)
    return best_val, best, visited


def fair_gmm(
    ds: Dataset, spec: FairnessSpec, seed: int | None = 0, budget: int = DEFAULT_BUDGET
) -> Selection:
    """Run GMM for ``k`` points inside every group, then search the pooled points exhaustively.

    When ``n <= k * m`` the whole universe is no larger than the pools could
    be, so every group is searched in full and the result is exact. Refuses
    with :class:`BudgetExceededError` when the number of candidate sets
    exceeds ``budget``. One-fifth approximation.
    """
    require_mode(ds, DISJOINT, "fair-gmm")
    spec.validate(ds)
    k = spec.k_total
    pools = []
    evals = 0
    whole = ds.n <= k * ds.m
    for g in range(ds.m):
        if whole:
            pools.append(ds.members(g).tolist())
            continue
        st = gmm(ds, ds.members(g), (), k, seed=None if seed is None else seed + g)
        pools.append(sorted(st.selected))
        evals += st.evals
    n_sets = 1
    for y, kg in zip(pools, spec.counts):
        n_sets *= n_choose(len(y), kg)
    # refuse on the worst case C(km, k) so the decision does not depend on the data
    bound = n_choose(k * ds.m, k)
    if bound > budget:
        raise BudgetExceededError(
            f"fair-gmm may enumerate up to C({k * ds.m}, {k}) = {bound} candidate sets, budget is {budget}", bound
        )
    pool = [u for y in pools for u in y]
    dist = ds.pairwise(pool)
    offsets = np.cumsum([0] + [len(y) for y in pools])
    local = [list(range(offsets[g], offsets[g + 1])) for g in range(ds.m)]
    _, best, visited = exhaustive_maxmin(dist, local, list(spec.counts))
    chosen = [pool[p] for p in best]
    sel = Selection.build(
        ds,
        chosen,
        "fair-gmm",
        diagnostics={"pool_sizes": [len(y) for y in pools], "whole_universe": whole, "candidate_sets": n_sets,
                     "visited": visited, "distance_evals": evals},
    )
    check_exact_counts(ds, spec, sel)
    return sel
