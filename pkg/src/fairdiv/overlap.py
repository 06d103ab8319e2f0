"""Fair selection when an element may belong to several groups."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    OVERLAPPING,
    Dataset,
    FairnessSpec,
    InfeasibleSpecError,
    InvariantViolation,
    Selection,
    check_min_counts,
    require_mode,
)
from .disjoint import swap_select
from .flow import (
    DIAMETER_RTOL,
    Guess,
    assignment_network,
    components,
    continuous_guesses,
    discrete_guesses,
    max_flow,
    search_largest,
)
from .gmm import gmm

DEFAULT_M_CAP = 4


def sperner_bound(m: int) -> int:
    """Largest antichain of subsets of an ``m``-set: ``C(m, m // 2)``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return math.comb(m, m // 2)


@dataclass(frozen=True)
class IntersectionClass:
    labels: frozenset[int]
    members: tuple[int, ...]


def partition_into_classes(ds: Dataset) -> dict[frozenset[int], IntersectionClass]:
    """Group elements by their exact label set."""
    acc: dict[frozenset[int], list[int]] = {}
    for u, mem in enumerate(ds.memberships):
        acc.setdefault(mem, []).append(u)
    return {L: IntersectionClass(L, tuple(us)) for L, us in acc.items()}


def _check_overlap_spec(ds: Dataset, spec: FairnessSpec, algorithm: str) -> None:
    require_mode(ds, OVERLAPPING, algorithm)
    spec.validate(ds)


# -- two groups -------------------------------------------------------------

def swap_overlap_probe(ds: Dataset, spec: FairnessSpec, gamma: float, seed: int | None = 0) -> Selection:
    """Keep a ``gamma/4``-separated maximal set of bi-coloured points, then swap-select the rest.

    Aborts when the single-coloured points left over cannot cover the
    remaining demand, or when the result is less than ``gamma/4`` diverse
    (which can only happen when ``gamma`` exceeds the optimum).
    """
    sep = gamma / 4
    classes = partition_into_classes(ds)
    both = classes.get(frozenset({0, 1}))
    kept_both: list[int] = []
    # max(k) bi-coloured points already satisfy both groups; more only costs diversity
    cap = max(spec.counts)
    if both is not None:
        if gamma > 0:
            kept_both = gmm(ds, both.members, (), cap, seed=seed, stop_below=sep).selected
        else:
            kept_both = list(both.members[:cap])
    close = np.zeros(ds.n, dtype=bool)
    close[kept_both] = True
    if gamma > 0:
        everything = np.arange(ds.n)
        for x in kept_both:
            close |= ds.dists(x, everything) < sep
    rest = np.nonzero(~close)[0]
    t = len(kept_both)
    multi = [u for u in rest if len(ds.memberships[u]) > 1]
    if multi:
        # only legal when the cap stopped the greedy; then no further point is needed
        if t < cap:
            raise InvariantViolation("a bi-coloured point survived the removal step")
        rest = np.array([u for u in rest if len(ds.memberships[u]) == 1], dtype=np.intp)
    pools = [np.array([u for u in rest if 0 in ds.memberships[u]], dtype=np.intp),
             np.array([u for u in rest if 1 in ds.memberships[u]], dtype=np.intp)]
    targets = [max(0, k - t) for k in spec.counts]
    diag = {"gamma": gamma, "bicolored_kept": t, "remaining": [len(p) for p in pools]}
    if any(len(p) < need for p, need in zip(pools, targets)):
        return Selection.abort(ds, "fair-swap-overlap", gamma_used=gamma, probes=1, diagnostics=diag)
    chosen, _ = swap_select(ds, pools, targets, seed=seed)
    sel = Selection.build(ds, list(kept_both) + list(chosen), "fair-swap-overlap", gamma_used=gamma,
                          probes=1, diagnostics=diag)
    check_min_counts(ds, spec, sel)
    if sel.diversity < sep:
        diag["rejected_diversity"] = sel.diversity
        return Selection.abort(ds, "fair-swap-overlap", gamma_used=gamma, probes=1, diagnostics=diag)
    return sel


def fair_swap_overlap(ds: Dataset, spec: FairnessSpec, search: str = "discrete",
                      gamma: float | None = None, seed: int | None = 0) -> Selection:
    """Two overlapping groups, 1/4 of the optimum.

    Guesses are all pairwise distances of the dataset (plus zero), searched
    for the largest guess that succeeds; ``search="fixed"`` evaluates only
    ``gamma``.
    """
    _check_overlap_spec(ds, spec, "fair-swap-overlap")
    if ds.m != 2:
        raise InfeasibleSpecError(f"fair-swap-overlap needs exactly 2 groups, got {ds.m}")
    if search == "fixed":
        if gamma is None or gamma < 0:
            raise ValueError("fixed search needs a non-negative gamma")
        return swap_overlap_probe(ds, spec, gamma, seed)
    if search != "discrete":
        raise ValueError(f"unknown search mode {search!r}")
    d = ds.pairwise(np.arange(ds.n))
    values = np.unique(d[np.triu_indices(ds.n, k=1)])
    gammas = [0.0] + [float(v) for v in values if v > 0]
    guesses = [Guess(g, g, g) for g in gammas]
    best, info = search_largest(guesses, lambda g: swap_overlap_probe(ds, spec, g.gamma, seed),
                                _higher)
    best.probes = info["probes"]
    best.diagnostics.update(info, candidate_guesses=len(guesses))
    return best


def _higher(a: Selection, b: Selection) -> bool:
    if a.diversity != b.diversity:
        return a.diversity > b.diversity
    return (a.gamma_used or 0.0) < (b.gamma_used or 0.0)


# -- three or more groups ---------------------------------------------------

def flow_guesses(ds: Dataset, spec: FairnessSpec, cap: int) -> list[dict[frozenset[int], int]]:
    """Enumerate per-class counts ``c_L``.

    Counts are chosen freely for multi-label sets; singleton counts are then
    the leftover demand of each group. Guesses whose total exceeds ``cap``
    or that ask a set for more elements than its intersection holds are
    skipped. Guesses come back ordered by total count, so smaller
    selections are tried first.
    """
    m = ds.m
    kmax = max(spec.counts)
    multi = [frozenset(c) for t in range(2, m + 1) for c in itertools.combinations(range(m), t)]
    inter = {L: sum(1 for mem in ds.memberships if L <= mem) for L in multi}
    ranges = [range(min(kmax, inter[L]) + 1) for L in multi]
    out = []
    for values in itertools.product(*ranges):
        c = {L: v for L, v in zip(multi, values) if v}
        covered = [sum(v for L, v in c.items() if i in L) for i in range(m)]
        for i in range(m):
            need = spec.counts[i] - covered[i]
            if need > 0:
                c[frozenset({i})] = need
        if sum(c.values()) > cap:
            continue
        if any(v > sum(1 for mem in ds.memberships if L <= mem) for L, v in c.items()):
            continue
        out.append(c)
    out.sort(key=lambda c: sum(c.values()))
    return out


def build_classes(ds: Dataset, spread: float, cap: int, seed: int | None) -> dict[frozenset[int], list[int]]:
    """Separated representatives per intersection class, largest label sets first.

    Each class keeps a maximal (up to ``cap`` points) subset that is ``spread``
    apart internally and from the representatives of every strict superset.
    """
    classes = partition_into_classes(ds)
    reps: dict[frozenset[int], list[int]] = {}
    for t in range(ds.m, 0, -1):
        for combo in itertools.combinations(range(ds.m), t):
            L = frozenset(combo)
            if L not in classes:
                continue
            above = [u for L2, zs in reps.items() if L < L2 for u in zs]
            members = classes[L].members
            if spread > 0:
                reps[L] = gmm(ds, members, above, cap, seed=seed, stop_below=spread).selected
            else:
                reps[L] = list(members[:cap])
    return reps


def flow_overlap_probe(ds: Dataset, spec: FairnessSpec, guess: Guess, reps: dict, guesses: list,
                       width: int) -> Selection:
    nodes = [(L, u) for L, zs in reps.items() for u in zs]
    ids = [u for _, u in nodes]
    dist = ds.pairwise(ids) if ids else np.zeros((0, 0))
    comp = components(dist, guess.conflict)
    n_comp = max(comp) + 1 if comp else 0
    members_of: list[list[int]] = [[] for _ in range(n_comp)]
    for i, c in enumerate(comp):
        members_of[c].append(i)
    for part in members_of:
        for a, b in itertools.combinations(part, 2):
            if nodes[a][0] <= nodes[b][0] or nodes[b][0] <= nodes[a][0]:
                raise InvariantViolation("a component holds points of comparable label sets")
        if len(part) > 1:
            worst = float(dist[np.ix_(part, part)].max())
            limit = (width - 1) * guess.conflict
            if not worst < limit + DIAMETER_RTOL * max(limit, 1.0):
                raise InvariantViolation(f"fair-flow-overlap: component diameter {worst} >= {limit}")

    diag = {"gamma": guess.gamma, "spread": guess.spread, "conflict": guess.conflict, "components": n_comp,
            "class_sizes": {"".join(str(i) for i in sorted(L)): len(zs) for L, zs in reps.items()},
            "networks_checked": 0}
    for c in guesses:
        sets = sorted(c, key=lambda L: (len(L), sorted(L)))
        incidence = set()
        pick: dict[tuple[int, int], int] = {}
        for li, L in enumerate(sets):
            for i, (L2, u) in enumerate(nodes):
                if L <= L2:
                    key = (li, comp[i])
                    incidence.add(key)
                    if key not in pick or u < pick[key]:
                        pick[key] = u
        asg = assignment_network([c[L] for L in sets], n_comp, incidence)
        value, flow = max_flow(asg.net)
        diag["networks_checked"] += 1
        if value < sum(c.values()):
            continue
        chosen = [pick[key] for key, e in asg.pair_edges.items() if flow[e] > 0]
        diag["guess"] = {"".join(str(i) for i in sorted(L)): c[L] for L in sets}
        sel = Selection.build(ds, chosen, "fair-flow-overlap", gamma_used=guess.gamma, probes=1,
                              diagnostics=diag)
        check_min_counts(ds, spec, sel)
        if sel.diversity < guess.conflict:
            raise InvariantViolation(f"fair-flow-overlap returned diversity {sel.diversity} < {guess.conflict}")
        return sel
    return Selection.abort(ds, "fair-flow-overlap", gamma_used=guess.gamma, probes=1, diagnostics=diag)


def fair_flow_overlap(ds: Dataset, spec: FairnessSpec, search: str = "discrete", eps: float = 0.1,
                      seed: int | None = 0, m_cap: int = DEFAULT_M_CAP) -> Selection:
    """Overlapping groups, ``m >= 3``: ``1/(3M-1)`` of the optimum with ``M = C(m, m//2)``.

    Each guess of the diversity is combined with every guess of how many
    selected points come from each intersection of groups.
    """
    _check_overlap_spec(ds, spec, "fair-flow-overlap")
    m = ds.m
    if m > m_cap:
        raise InfeasibleSpecError(
            f"fair-flow-overlap is limited to m <= {m_cap}; m = {m} means up to "
            f"k^(2^m - 1 - m) = k^{2 ** m - 1 - m} count guesses")
    if m < 3:
        raise InfeasibleSpecError("fair-flow-overlap needs m >= 3 (use fair-swap-overlap for m = 2)")
    width = sperner_bound(m)
    cap = spec.k_total
    guesses = flow_guesses(ds, spec, cap)
    d = ds.pairwise(np.arange(ds.n))
    values = d[np.triu_indices(ds.n, k=1)]
    factor = 3 * width - 1
    if search == "discrete":
        gammas = discrete_guesses(values, factor, width)
    elif search == "continuous":
        gammas = continuous_guesses(values, factor, width, eps)
    else:
        raise ValueError(f"unknown search mode {search!r}")
    checked = 0

    def probe(g: Guess) -> Selection:
        nonlocal checked
        reps = build_classes(ds, g.spread, cap, seed)
        sel = flow_overlap_probe(ds, spec, g, reps, guesses, width)
        checked += sel.diagnostics["networks_checked"]
        return sel

    best, info = search_largest(gammas, probe, _higher)
    best.probes = info["probes"]
    best.diagnostics.update(info, candidate_guesses=len(gammas), count_guesses=len(guesses),
                            sperner_M=width, networks_checked=checked)
    return best
