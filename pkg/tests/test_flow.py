import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairdiv import Dataset, FairnessSpec, FlowNetwork, InvariantViolation, fair_flow, fair_flow_probe, max_flow
from fairdiv import oracle_fair_maxmin
from fairdiv.flow import (
    Guess,
    assignment_network,
    check_flow,
    components,
    discrete_guesses,
    flow_thresholds,
    search_largest,
    separated_prefix,
)
from fairdiv.core import Selection

from conftest import disjoint_instances, fair_counts, line


def test_three_colour_assignment_example():
    # colour 1 in C1, C2; colour 2 in C1, C3, C4; colour 3 in C4, C5
    incidence = [(0, 0), (0, 1), (1, 0), (1, 2), (1, 3), (2, 3), (2, 4)]
    asg = assignment_network([2, 1, 1], 5, incidence)
    value, flow = max_flow(asg.net)
    assert value == 4
    used = [key for key, e in asg.pair_edges.items() if flow[e]]
    assert len({j for _, j in used}) == 4


def test_single_group_single_component():
    asg = assignment_network([1], 1, [(0, 0)])
    assert max_flow(asg.net)[0] == 1


def test_group_short_of_components():
    asg = assignment_network([2], 1, [(0, 0)])
    assert max_flow(asg.net)[0] == 1


def test_rejects_fractional_capacity():
    net = FlowNetwork()
    with pytest.raises((TypeError, ValueError)):
        net.add_edge(0, 1, 1.5)


def test_check_flow_catches_bad_flows():
    net = FlowNetwork()
    mid = net.add_node()
    net.add_edge(net.source, mid, 2)
    net.add_edge(mid, net.sink, 1)
    with pytest.raises(InvariantViolation):
        check_flow(net, [2, 1], 1)  # not conserved
    with pytest.raises(InvariantViolation):
        check_flow(net, [2, 2], 2)  # over capacity
    check_flow(net, [1, 1], 1)


@st.composite
def networks(draw):
    n = draw(st.integers(2, 8))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(0, 5)),
                          max_size=25))
    return n, [(a, b, c) for a, b, c in edges if a != b]


@given(networks())
def test_max_flow_matches_networkx(spec):
    n, edges = spec
    net = FlowNetwork(n_nodes=n)
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    for a, b, c in edges:
        net.add_edge(a, b, c)
        if g.has_edge(a, b):
            g[a][b]["capacity"] += c
        else:
            g.add_edge(a, b, capacity=c)
    value, flow = max_flow(net)
    assert value == nx.maximum_flow_value(g, 0, 1)
    assert all(isinstance(f, int) for f in flow)


def test_components_threshold_is_strict():
    d = np.array([[0, 1, 5], [1, 0, 5], [5, 5, 0]], dtype=float)
    assert components(d, 1.0) == [0, 1, 2]
    assert components(d, 1.5) == [0, 0, 1]
    assert components(d, 5.5) == [0, 0, 0]


def test_separated_prefix_stops_at_first_conflict():
    d = np.array([[0, 5, 1, 9], [5, 0, 6, 9], [1, 6, 0, 9], [9, 9, 9, 0]], dtype=float)
    assert separated_prefix(d, [0, 1, 2, 3], 2.0) == [0, 1]


def test_thresholds():
    spread, conflict = flow_thresholds(8.0, 3)
    assert (spread, conflict) == (3.0, 1.0)


def test_discrete_guesses_hit_distances_exactly():
    gs = discrete_guesses(np.array([1.0, 2.0, 2.0]), 8, 3)
    assert gs[0] == Guess(0.0, 0.0, 0.0)
    assert Guess(8.0, 3.0, 1.0) in gs
    assert any(g.spread == 2.0 for g in gs) and any(g.conflict == 2.0 for g in gs)
    assert [g.gamma for g in gs] == sorted({g.gamma for g in gs})


def test_search_records_non_monotone_aborts():
    guesses = [Guess(float(i), 0, 0) for i in range(6)]
    ok = {0, 1, 2, 4}
    ds = line([0, 1], ["a", "a"])

    def probe(g):
        if int(g.gamma) in ok:
            return Selection(((0,)), 1.0 + g.gamma, (1,), "t", gamma_used=g.gamma)
        return Selection.abort(ds, "t", gamma_used=g.gamma)

    best, info = search_largest(guesses, probe, lambda a, b: a.diversity > b.diversity)
    assert not best.aborted
    assert info["probes"] <= len(guesses)
    for g in info["non_monotone_gammas"]:
        assert int(g) not in ok


def test_tiny_gamma_never_aborts():
    rng = np.random.default_rng(2)
    ds = Dataset.from_points(rng.uniform(size=(12, 2)), ["a", "b", "c"] * 4)
    spec = FairnessSpec((2, 1, 1))
    sel = fair_flow_probe(ds, spec, 1e-12)
    assert not sel.aborted
    assert tuple(sel.per_group_counts) == spec.counts


def test_huge_gamma_aborts():
    rng = np.random.default_rng(2)
    ds = Dataset.from_points(rng.uniform(size=(12, 2)), ["a", "b", "c"] * 4)
    spec = FairnessSpec((2, 1, 1))
    dmax = ds.pairwise(np.arange(12)).max()
    sel = fair_flow_probe(ds, spec, 8 * dmax * 1.01)
    assert sel.aborted
    assert sel.diagnostics["prefix_sizes"] == [1, 1, 1]


def test_probe_at_optimum_does_not_abort():
    rng = np.random.default_rng(8)
    ds = Dataset.from_points(rng.uniform(size=(12, 2)), ["a", "b", "c"] * 4)
    spec = FairnessSpec((2, 1, 1))
    opt = oracle_fair_maxmin(ds, spec).opt_value
    sel = fair_flow_probe(ds, spec, opt)
    assert not sel.aborted
    assert sel.diversity >= opt / 8


def test_probe_rejects_nonpositive_gamma():
    ds = line([0, 1], ["a", "b"])
    with pytest.raises(ValueError):
        fair_flow_probe(ds, FairnessSpec((1, 1)), 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_single_group_half(seed):
    rng = np.random.default_rng(seed)
    ds = Dataset.from_points(rng.uniform(size=(10, 2)), ["a"] * 10)
    spec = FairnessSpec((4,))
    assert fair_flow(ds, spec).diversity >= oracle_fair_maxmin(ds, spec).opt_value / 2 - 1e-9


def test_three_clusters_one_each():
    rng = np.random.default_rng(4)
    centers = np.array([[0, 0], [10, 0], [0, 10]], dtype=float)
    pts = np.concatenate([c + rng.uniform(-0.05, 0.05, size=(3, 2)) for c in centers])
    ds = Dataset.from_points(pts, ["a"] * 3 + ["b"] * 3 + ["c"] * 3)
    sel = fair_flow(ds, FairnessSpec((1, 1, 1)))
    assert sorted(u // 3 for u in sel.chosen) == [0, 1, 2]
    assert sel.diversity >= 10 / 8
    assert sel.diversity >= oracle_fair_maxmin(ds, FairnessSpec((1, 1, 1))).opt_value / 8


def test_coincident_colour():
    ds = Dataset.from_points([[0, 0], [0, 0], [0, 0], [5, 5], [6, 6]], ["a", "a", "a", "b", "b"])
    spec = FairnessSpec((2, 1))
    sel = fair_flow(ds, spec)
    assert sel.diversity == 0.0
    assert tuple(sel.per_group_counts) == (2, 1)


def test_unknown_search_mode():
    ds = line([0, 1], ["a", "b"])
    with pytest.raises(ValueError):
        fair_flow(ds, FairnessSpec((1, 1)), search="ternary")


@given(disjoint_instances(m_max=4, n_max=10), st.data())
def test_fair_flow_bound_and_counts(ds, data):
    spec = FairnessSpec(data.draw(fair_counts(ds, k_max=4)))
    opt = oracle_fair_maxmin(ds, spec).opt_value
    m = ds.m
    sel = fair_flow(ds, spec)
    assert tuple(sel.per_group_counts) == spec.counts
    assert sel.diversity >= opt / (3 * m - 1) - 1e-9
    g = sel.gamma_used
    assert sel.diversity >= g / (3 * m - 1) * (1 - 1e-12)
    cont = fair_flow(ds, spec, search="continuous", eps=0.25)
    assert tuple(cont.per_group_counts) == spec.counts
    assert cont.diversity >= opt / ((3 * m - 1) * 1.25) - 1e-9


@given(disjoint_instances(m_max=4, n_max=10), st.data())
def test_probe_component_checks_hold_for_any_gamma(ds, data):
    # the probe raises InvariantViolation if a component is too wide or repeats a group
    spec = FairnessSpec(data.draw(fair_counts(ds, k_max=4)))
    gamma = data.draw(st.floats(1e-6, 200.0))
    sel = fair_flow_probe(ds, spec, gamma)
    if not sel.aborted:
        assert sel.diversity >= gamma / (3 * ds.m - 1) * (1 - 1e-12)
    opt = oracle_fair_maxmin(ds, spec).opt_value
    if 0 < gamma <= opt:
        assert not sel.aborted
