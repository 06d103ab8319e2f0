import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairdiv import (
    Dataset,
    FairnessSpec,
    InfeasibleSpecError,
    fair_flow,
    fair_kcenter,
    fair_kcenter_probe,
    gmm,
    oracle_fair_kcenter,
    oracle_fair_maxmin,
)

from conftest import disjoint_instances, fair_counts, line


def three_clusters(seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0, 0], [10, 0], [5, 8.66]])
    # each cluster has diameter below 0.1
    pts = np.concatenate([c + rng.uniform(-0.035, 0.035, size=(4, 2)) for c in centers])
    return Dataset.from_points(pts, ["a"] * 4 + ["b"] * 4 + ["c"] * 4)


def test_tight_clusters_probe():
    ds = three_clusters()
    spec = FairnessSpec((1, 1, 1))
    spread = max(ds.diversity([u, v]) for g in range(3) for u, v in itertools.combinations(ds.members(g), 2))
    res = fair_kcenter_probe(ds, spec, spread)
    assert not res.aborted
    assert res.radius <= 3 * spread
    assert sorted(u // 4 for u in res.centers) == [0, 1, 2]


def test_tight_clusters_search_vs_oracle():
    ds = three_clusters(1)
    spec = FairnessSpec((1, 1, 1))
    opt = oracle_fair_kcenter(ds, spec).opt_value
    res = fair_kcenter(ds, spec)
    assert res.radius <= 3 * opt + 1e-9
    assert ds.radius(res.centers) == res.radius


def test_abort_when_gamma_below_separation():
    ds = line([0, 10, 20, 30], ["a", "a", "b", "b"])
    spec = FairnessSpec((1, 1))
    # any 3 of these points are >= 10 apart, so 2 * gamma < 10 must abort
    res = fair_kcenter_probe(ds, spec, 4.9)
    assert res.aborted and res.diagnostics["abort"] == "separated"
    assert not fair_kcenter_probe(ds, spec, 10.0).aborted


def test_n_equals_k():
    ds = line([0, 3, 8], ["a", "b", "a"])
    res = fair_kcenter(ds, FairnessSpec((2, 1)))
    assert sorted(res.centers) == [0, 1, 2]
    assert res.radius == 0.0


def test_coincident_points():
    ds = Dataset.from_points(np.zeros((6, 2)), ["a", "b"] * 3)
    res = fair_kcenter(ds, FairnessSpec((1, 2)))
    assert res.radius == 0.0
    assert res.per_group_counts == (1, 2)


def test_requires_disjoint():
    ds = line([0, 1, 2], [["a", "b"], "a", "b"])
    with pytest.raises(InfeasibleSpecError):
        fair_kcenter(ds, FairnessSpec((1, 1), "overlapping"))


def test_clustering_and_diversity_optima_differ():
    # one white and one black to pick; outer points spread, inner points cover
    ds = line([0, 1, 2, 10, 11, 12], ["w", "w", "w", "b", "b", "b"])
    spec = FairnessSpec((1, 1))
    assert sorted(oracle_fair_kcenter(ds, spec).witness) == [1, 4]
    assert sorted(oracle_fair_maxmin(ds, spec).witness) == [0, 5]
    clu = fair_kcenter(ds, spec)
    div = fair_flow(ds, spec)
    assert set(clu.centers) != set(div.chosen)
    assert clu.radius <= 3 * oracle_fair_kcenter(ds, spec).opt_value
    assert div.diversity >= oracle_fair_maxmin(ds, spec).opt_value / 5


@pytest.mark.parametrize("seed", range(5))
def test_single_group_against_greedy(seed):
    rng = np.random.default_rng(seed)
    ds = Dataset.from_points(rng.uniform(size=(11, 2)), ["a"] * 11)
    spec = FairnessSpec((3,))
    opt = oracle_fair_kcenter(ds, spec).opt_value
    res = fair_kcenter(ds, spec)
    assert res.radius <= 3 * opt + 1e-9
    greedy = ds.radius(gmm(ds, range(11), k=3, seed=seed).selected)
    assert greedy <= 2 * opt + 1e-9


@given(disjoint_instances(m_max=3, n_max=11), st.data(), st.integers(0, 30))
def test_three_approximation(ds, data, seed):
    spec = FairnessSpec(data.draw(fair_counts(ds, k_max=4)))
    opt = oracle_fair_kcenter(ds, spec).opt_value
    res = fair_kcenter(ds, spec, seed=seed)
    assert res.per_group_counts == spec.counts
    assert res.radius == ds.radius(res.centers)
    assert res.radius <= 3 * opt + 1e-9
    cont = fair_kcenter(ds, spec, search="continuous", eps=0.2, seed=seed)
    assert cont.radius <= 3 * 1.2 * opt + 1e-9


@given(disjoint_instances(m_max=3, n_max=11), st.data())
def test_probe_radius_bound(ds, data):
    spec = FairnessSpec(data.draw(fair_counts(ds, k_max=4)))
    gamma = data.draw(st.floats(0, 60))
    res = fair_kcenter_probe(ds, spec, gamma)
    if not res.aborted and ds.n > spec.k_total:
        assert res.radius <= 3 * gamma * (1 + 1e-9)
    if gamma >= oracle_fair_kcenter(ds, spec).opt_value:
        assert not res.aborted
