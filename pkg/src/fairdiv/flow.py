"""Integral max flow and flow-based fair selection for any number of disjoint groups."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DISJOINT,
    Dataset,
    FairnessSpec,
    InvariantViolation,
    Selection,
    check_exact_counts,
    require_mode,
)
from .gmm import gmm

# relative slack for float round-off in the component-diameter check
DIAMETER_RTOL = 1e-9


class FlowNetwork:
    """Directed graph with integer capacities, solved with Dinic's algorithm."""

    def __init__(self, n_nodes: int = 2, source: int = 0, sink: int = 1):
        self.n_nodes = n_nodes
        self.source = source
        self.sink = sink
        self.tails: list[int] = []
        self.heads: list[int] = []
        self.caps: list[int] = []
        self.names: dict[int, str] = {}

    def add_node(self, name: str | None = None) -> int:
        v = self.n_nodes
        self.n_nodes += 1
        if name is not None:
            self.names[v] = name
        return v

    def add_edge(self, tail: int, head: int, cap: int) -> int:
        if int(cap) != cap or cap < 0:
            raise ValueError(f"capacity must be a non-negative integer, got {cap!r}")
        if not (0 <= tail < self.n_nodes and 0 <= head < self.n_nodes) or tail == head:
            raise ValueError(f"malformed edge ({tail}, {head})")
        self.tails.append(tail)
        self.heads.append(head)
        self.caps.append(int(cap))
        return len(self.caps) - 1

    @property
    def n_edges(self) -> int:
        return len(self.caps)


def max_flow(net: FlowNetwork) -> tuple[int, list[int]]:
    """Maximum source-sink flow; returns ``(value, per-edge flow)``.

    The result is verified for capacity bounds and conservation before it
    is returned.
    """
    if net.source == net.sink:
        raise ValueError("source and sink coincide")
    n = net.n_nodes
    # residual arcs: 2e is forward, 2e+1 its reverse
    head = []
    cap = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for e, (u, v, c) in enumerate(zip(net.tails, net.heads, net.caps)):
        adj[u].append(2 * e)
        head.append(v)
        cap.append(c)
        adj[v].append(2 * e + 1)
        head.append(u)
        cap.append(0)
    s, t = net.source, net.sink
    value = 0
    while True:
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for a in adj[u]:
                if cap[a] > 0 and level[head[a]] < 0:
                    level[head[a]] = level[u] + 1
                    q.append(head[a])
        if level[t] < 0:
            break
        it = [0] * n
        while True:
            pushed = _augment(s, t, adj, head, cap, level, it)
            if not pushed:
                break
            value += pushed
    flow = [cap[2 * e + 1] for e in range(net.n_edges)]
    check_flow(net, flow, value)
    return value, flow


def _augment(s, t, adj, head, cap, level, it) -> int:
    # iterative DFS on the level graph; unit-ish capacities keep paths short
    path: list[int] = []
    u = s
    while True:
        if u == t:
            pushed = min(cap[a] for a in path)
            for a in path:
                cap[a] -= pushed
                cap[a ^ 1] += pushed
            return pushed
        advanced = False
        while it[u] < len(adj[u]):
            a = adj[u][it[u]]
            v = head[a]
            if cap[a] > 0 and level[v] == level[u] + 1:
                path.append(a)
                u = v
                advanced = True
                break
            it[u] += 1
        if not advanced:
            if u == s:
                return 0
            level[u] = -1
            a = path.pop()
            u = head[a ^ 1]
            it[u] += 1


def check_flow(net: FlowNetwork, flow: list[int], value: int | None = None) -> None:
    """Raise :class:`InvariantViolation` unless ``flow`` is integral, feasible and conserved."""
    balance = [0] * net.n_nodes
    for e, f in enumerate(flow):
        if int(f) != f or not 0 <= f <= net.caps[e]:
            raise InvariantViolation(f"edge {e} carries {f} outside [0, {net.caps[e]}]")
        balance[net.tails[e]] -= f
        balance[net.heads[e]] += f
    for v, b in enumerate(balance):
        if v not in (net.source, net.sink) and b != 0:
            raise InvariantViolation(f"flow not conserved at node {v} (excess {b})")
    if value is not None and balance[net.sink] != value:
        raise InvariantViolation(f"sink receives {balance[net.sink]}, reported value {value}")


@dataclass
class Assignment:
    """Bipartite supply/component network: groups (or classes) on the left, components on the right."""

    net: FlowNetwork
    left_nodes: list[int]
    right_nodes: list[int]
    left_edges: list[int]
    pair_edges: dict[tuple[int, int], int] = field(default_factory=dict)


def assignment_network(supplies: list[int], n_components: int, incidence) -> Assignment:
    """Source -> left node i (capacity ``supplies[i]``) -> component j (1) -> sink (1)."""
    net = FlowNetwork()
    left = [net.add_node(f"u{i}") for i in range(len(supplies))]
    right = [net.add_node(f"v{j}") for j in range(n_components)]
    left_edges = [net.add_edge(net.source, u, c) for u, c in zip(left, supplies)]
    for v in right:
        net.add_edge(v, net.sink, 1)
    out = Assignment(net, left, right, left_edges)
    for i, j in sorted(set(incidence)):
        out.pair_edges[(i, j)] = net.add_edge(left[i], right[j], 1)
    return out


def components(dist: np.ndarray, threshold: float) -> list[int]:
    """Connected components of the graph with an edge wherever ``dist < threshold``.

    Returns a component label per node, labelled in order of first node.
    """
    n = dist.shape[0]
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    ii, jj = np.nonzero(np.triu(dist < threshold, k=1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    labels: dict[int, int] = {}
    return [labels.setdefault(find(i), len(labels)) for i in range(n)]


def separated_prefix(dist: np.ndarray, order: list[int], spread: float) -> list[int]:
    """Longest prefix of ``order`` whose points are pairwise ``>= spread`` apart."""
    out: list[int] = []
    for p in order:
        if out and float(dist[p, out].min()) < spread:
            break
        out.append(p)
    return out


def check_component_diameter(dist, members_of, limit: float, what: str) -> None:
    for comp in members_of:
        if len(comp) < 2:
            continue
        sub = dist[np.ix_(comp, comp)]
        worst = float(sub.max())
        if not worst < limit + DIAMETER_RTOL * max(limit, 1.0):
            raise InvariantViolation(f"{what}: component diameter {worst} >= bound {limit}")


@dataclass
class FlowPool:
    """Guess-independent part of the flow algorithm: a GMM order per group."""

    orders: list[list[int]]  # per group, positions into ``pool`` in GMM order
    pool: list[int]
    group_of: list[int]
    dist: np.ndarray
    evals: int


def build_pool(ds: Dataset, spec: FairnessSpec, seed: int | None) -> FlowPool:
    k = spec.k_total
    orders, pool, group_of = [], [], []
    evals = 0
    for g in range(ds.m):
        st = gmm(ds, ds.members(g), (), k, seed=None if seed is None else seed + g)
        evals += st.evals
        orders.append(list(range(len(pool), len(pool) + len(st.selected))))
        pool.extend(st.selected)
        group_of.extend([g] * len(st.selected))
    return FlowPool(orders, pool, group_of, ds.pairwise(pool), evals)


def flow_probe(ds: Dataset, spec: FairnessSpec, pool: FlowPool, spread: float, conflict: float, gamma: float) -> Selection:
    """One guess: separated prefixes, conflict components, then an assignment flow."""
    m = ds.m
    reps = [separated_prefix(pool.dist, order, spread) for order in pool.orders]
    nodes = [p for zi in reps for p in zi]
    sub = pool.dist[np.ix_(nodes, nodes)]
    comp = components(sub, conflict)
    n_comp = max(comp) + 1 if comp else 0
    members_of: list[list[int]] = [[] for _ in range(n_comp)]
    for local, c in enumerate(comp):
        members_of[c].append(local)

    # at most one point of each group per component
    where: dict[tuple[int, int], int] = {}
    for local, c in enumerate(comp):
        g = pool.group_of[nodes[local]]
        if (g, c) in where:
            raise InvariantViolation(f"component {c} holds two points of group {ds.labels[g]!r}")
        where[(g, c)] = nodes[local]
    check_component_diameter(sub, members_of, (m - 1) * conflict, "fair-flow")

    asg = assignment_network(list(spec.counts), n_comp, where.keys())
    value, flow = max_flow(asg.net)
    diag = {"gamma": gamma, "spread": spread, "conflict": conflict, "prefix_sizes": [len(zi) for zi in reps],
            "components": n_comp, "flow": value}
    if value < spec.k_total:
        return Selection.abort(ds, "fair-flow", gamma_used=gamma, probes=1, diagnostics=diag)
    chosen = [pool.pool[where[key]] for key, e in asg.pair_edges.items() if flow[e] > 0]
    sel = Selection.build(ds, chosen, "fair-flow", gamma_used=gamma, probes=1, diagnostics=diag)
    check_exact_counts(ds, spec, sel)
    if sel.diversity < conflict:
        raise InvariantViolation(f"fair-flow returned diversity {sel.diversity} < conflict = {conflict}")
    return sel


def flow_thresholds(gamma: float, m: int) -> tuple[float, float]:
    return m * gamma / (3 * m - 1), gamma / (3 * m - 1)


def fair_flow_probe(ds: Dataset, spec: FairnessSpec, gamma: float, seed: int | None = 0,
                    pool: FlowPool | None = None) -> Selection:
    """Evaluate a single diversity guess ``gamma``; the result may be aborted.

    A non-aborted result has all points at least ``gamma / (3m - 1)`` apart,
    and the probe never aborts when ``gamma`` is at most the optimum.
    """
    require_mode(ds, DISJOINT, "fair-flow")
    spec.validate(ds)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if pool is None:
        pool = build_pool(ds, spec, seed)
    spread, conflict = flow_thresholds(gamma, ds.m)
    sel = flow_probe(ds, spec, pool, spread, conflict, gamma)
    sel.diagnostics["networks_checked"] = 1
    return sel


@dataclass(frozen=True)
class Guess:
    gamma: float
    spread: float
    conflict: float


def discrete_guesses(dist_values: np.ndarray, factor: int, ratio: int) -> list[Guess]:
    """Guesses at which ``spread = ratio * gamma / factor`` or ``conflict = gamma / factor`` hits a distance.

    Thresholds are set to the distance itself rather than recomputed from
    gamma, so float rounding cannot push a guess across its breakpoint. A
    zero guess (every candidate kept, no conflicts) closes the list.
    """
    out = {0.0: Guess(0.0, 0.0, 0.0)}
    for delta in np.unique(dist_values[dist_values > 0]).tolist():
        g2 = delta * factor
        out.setdefault(g2, Guess(g2, ratio * delta, delta))
        g1 = delta * factor / ratio
        out.setdefault(g1, Guess(g1, delta, delta / ratio))
    return [out[g] for g in sorted(out)]


def continuous_guesses(dist_values: np.ndarray, factor: int, ratio: int, eps: float) -> list[Guess]:
    """Geometric grid ``(1+eps)^i * d_min`` up to ``d_max``, plus the zero guess."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    pos = dist_values[dist_values > 0]
    out = [Guess(0.0, 0.0, 0.0)]
    if pos.size == 0:
        return out
    dmin, dmax = float(pos.min()), float(pos.max())
    steps = math.ceil(math.log(dmax / dmin) / math.log1p(eps)) if dmax > dmin else 0
    for i in range(steps + 1):
        g = dmin * (1 + eps) ** i
        out.append(Guess(g, ratio * g / factor, g / factor))
    return out


def search_largest(guesses: list[Guess], probe, better) -> tuple[Selection, dict]:
    """Binary search for the largest non-aborting guess.

    Every evaluated probe is kept; the best verified selection among them is
    returned (``better(a, b)`` says whether ``a`` beats ``b``). Aborts above
    a success are recorded as monotonicity violations.
    """
    results: dict[int, Selection] = {}

    def run(i):
        if i not in results:
            results[i] = probe(guesses[i])
        return results[i]

    lo, hi = 0, len(guesses) - 1
    if run(lo).aborted:
        # the zero guess cannot abort on a feasible instance
        raise InvariantViolation("the smallest guess aborted")
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if run(mid).aborted:
            hi = mid - 1
        else:
            lo = mid
    best = None
    for i in sorted(results):
        r = results[i]
        if not r.aborted and (best is None or better(r, best)):
            best = r
    ok = sorted(i for i, r in results.items() if not r.aborted)
    bad = sorted(i for i, r in results.items() if r.aborted)
    non_monotone = [guesses[i].gamma for i in bad if ok and i < ok[-1]]
    info = {"probes": len(results), "largest_ok_gamma": guesses[lo].gamma,
            "non_monotone_gammas": non_monotone}
    return best, info


def higher_diversity(a: Selection, b: Selection) -> bool:
    if a.diversity != b.diversity:
        return a.diversity > b.diversity
    return (a.gamma_used or 0.0) < (b.gamma_used or 0.0)


def fair_flow(ds: Dataset, spec: FairnessSpec, search: str = "discrete", eps: float = 0.1,
              seed: int | None = 0) -> Selection:
    """Fair selection for any number of disjoint groups, ``1/(3m-1)`` of the optimum.

    ``search="discrete"`` probes only guesses whose thresholds land on a
    distance among the GMM pools; ``"continuous"`` walks a ``(1+eps)``
    geometric grid between the smallest and largest pool distance.
    """
    require_mode(ds, DISJOINT, "fair-flow")
    spec.validate(ds)
    m = ds.m
    pool = build_pool(ds, spec, seed)
    iu = np.triu_indices(len(pool.pool), k=1)
    values = pool.dist[iu]
    if search == "discrete":
        guesses = discrete_guesses(values, 3 * m - 1, m)
    elif search == "continuous":
        guesses = continuous_guesses(values, 3 * m - 1, m, eps)
    else:
        raise ValueError(f"unknown search mode {search!r}")
    best, info = search_largest(guesses, lambda g: flow_probe(ds, spec, pool, g.spread, g.conflict, g.gamma),
                                higher_diversity)
    best = Selection(best.chosen, best.diversity, best.per_group_counts, "fair-flow",
                     gamma_used=best.gamma_used, probes=info["probes"],
                     diagnostics={**best.diagnostics, **info, "search": search,
                                  "candidate_guesses": len(guesses),
                                  "networks_checked": info["probes"],
                                  "distance_evals": pool.evals})
    return best
