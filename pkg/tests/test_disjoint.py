import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairdiv import BudgetExceededError, Dataset, FairnessSpec, InfeasibleSpecError, fair_gmm, fair_swap, gmm
from fairdiv import oracle_fair_maxmin
from fairdiv.disjoint import exhaustive_maxmin

from conftest import disjoint_instances, fair_counts, line


def by_coord(ds, sel):
    return sorted(float(ds.points[u, 0]) for u in sel.chosen)


def test_black_white_line(black_white):
    spec = FairnessSpec((2, 1))
    sel = fair_swap(black_white, spec, first=0)
    assert by_coord(black_white, sel) == [0, 4.5, 10]
    assert sel.diversity == 4.5
    assert oracle_fair_maxmin(black_white, spec).opt_value == 4.5


def test_balancing_phase():
    ds = line([0, 10, 1, 9], ["white", "white", "black", "black"])
    sel = fair_swap(ds, FairnessSpec((1, 2)), first=0)
    assert by_coord(ds, sel) in ([0, 1, 9], [1, 9, 10])
    assert sel.diversity == 1.0
    assert sel.diagnostics["under"] == "black"
    assert len(sel.diagnostics["extras"]) == len(sel.diagnostics["removed"]) == 1


def test_already_balanced_is_untouched():
    ds = line([0, 1, 100, 101], ["a", "a", "b", "b"])
    sel = fair_swap(ds, FairnessSpec((1, 1)), first=0)
    assert sel.diagnostics["extras"] == [] and sel.diagnostics["removed"] == []
    assert list(sel.chosen) == sel.diagnostics["color_blind"] == [0, 3]


def naive_two_phase(ds, spec, first):
    # greedy over all colours until one is full, then greedy inside the other
    chosen = [first]
    while True:
        counts = ds.counts(chosen)
        full = [g for g in range(2) if counts[g] >= spec.counts[g]]
        if full:
            break
        chosen += gmm(ds, range(ds.n), chosen, 1).selected
    other = 1 - full[0]
    need = spec.counts[other] - ds.counts(chosen)[other]
    pool = [u for u in ds.members(other) if u not in chosen]
    return chosen + gmm(ds, pool, chosen, need).selected


def test_naive_greedy_failure_is_avoided():
    # elements 1..4 of the naive-greedy counterexample; 1 and 2 nearly coincide
    ds = line([0.0, 0.01, 7.0, 10.0], ["black", "white", "black", "black"])
    spec = FairnessSpec((2, 1))
    opt = oracle_fair_maxmin(ds, spec).opt_value
    assert opt == 3.0
    for first in ds.members(0):
        naive = naive_two_phase(ds, spec, int(first))
        assert {0, 1} <= set(naive)
        assert ds.diversity(naive) == pytest.approx(0.01)
        sel = fair_swap(ds, spec, first=int(first))
        assert sel.diversity >= opt / 4


def test_swap_rejects_wrong_m():
    ds = line([0, 1, 2], ["a", "b", "c"])
    with pytest.raises(InfeasibleSpecError):
        fair_swap(ds, FairnessSpec((1, 1, 1)))


def test_swap_rejects_overlap():
    ds = line([0, 1, 2], [["a", "b"], "a", "b"])
    with pytest.raises(InfeasibleSpecError):
        fair_swap(ds, FairnessSpec((1, 1), "overlapping"))


@given(disjoint_instances(m_min=2, m_max=2, n_max=10), st.data(), st.integers(0, 99))
def test_swap_properties(ds, data, seed):
    spec = FairnessSpec(data.draw(fair_counts(ds, k_max=5)))
    sel = fair_swap(ds, spec, seed=seed)
    diag = sel.diagnostics
    assert tuple(sel.per_group_counts) == spec.counts
    blind = diag["color_blind"]
    under = ds.label_index(diag["under"])
    over = 1 - under
    extras, removed = diag["extras"], diag["removed"]
    s_under = [u for u in blind if under in ds.memberships[u]]
    assert len(extras) == len(removed) == max(0, spec.counts[under] - len(s_under))
    assert all(over in ds.memberships[u] and u in blind for u in removed)
    assert all(under in ds.memberships[u] and u not in blind for u in extras)

    opt_fair = oracle_fair_maxmin(ds, spec).opt_value
    assert sel.diversity >= opt_fair / 4 - 1e-9
    k = spec.k_total
    opt_free = max(ds.diversity(c) for c in itertools.combinations(range(ds.n), k))
    assert ds.diversity(blind) >= opt_free / 2 - 1e-9
    if s_under + extras:
        assert ds.diversity(s_under + extras) >= opt_fair / 2 - 1e-9


def test_sequential_removal_on_shared_nearest_point():
    # both extras are closest to the same over-group point; it is removed once
    ds = line([0, 1, 2, 20, 21], ["o", "o", "o", "u", "u"])
    sel = fair_swap(ds, FairnessSpec((1, 2)), first=0)
    removed = sel.diagnostics["removed"]
    assert len(removed) == len(set(removed))
    assert tuple(sel.per_group_counts) == (1, 2)


def test_fair_gmm_whole_universe_is_exact():
    rng = np.random.default_rng(5)
    ds = Dataset.from_points(rng.uniform(size=(6, 2)), ["a", "a", "a", "b", "b", "b"])
    spec = FairnessSpec((2, 1))
    sel = fair_gmm(ds, spec)
    assert sel.diagnostics["whole_universe"]
    assert sel.diversity == oracle_fair_maxmin(ds, spec).opt_value


def test_fair_gmm_random_two_groups():
    rng = np.random.default_rng(11)
    ds = Dataset.from_points(rng.uniform(size=(10, 2)), ["a"] * 5 + ["b"] * 5)
    spec = FairnessSpec((2, 2))
    assert fair_gmm(ds, spec).diversity >= oracle_fair_maxmin(ds, spec).opt_value / 5 - 1e-9


def test_fair_gmm_takes_everything_when_forced():
    ds = line([0, 3, 7, 8], ["a", "b", "a", "c"])
    sel = fair_gmm(ds, FairnessSpec((2, 1, 1)))
    assert sorted(sel.chosen) == [0, 1, 2, 3]


def test_fair_gmm_budget_refusal():
    ds = line(range(40), ["a", "b"] * 20)
    with pytest.raises(BudgetExceededError) as err:
        fair_gmm(ds, FairnessSpec((5, 5)), budget=1000)
    assert err.value.count == 184756  # C(20, 10)
    assert "184756" in str(err.value)


@given(disjoint_instances(m_max=3, n_max=12), st.data())
def test_fair_gmm_fifth(ds, data):
    spec = FairnessSpec(data.draw(fair_counts(ds, k_max=4)))
    sel = fair_gmm(ds, spec)
    assert tuple(sel.per_group_counts) == spec.counts
    assert sel.diversity >= oracle_fair_maxmin(ds, spec).opt_value / 5 - 1e-9


@given(disjoint_instances(m_max=3, n_max=8), st.data())
def test_exhaustive_matches_plain_enumeration(ds, data):
    spec = data.draw(fair_counts(ds, k_max=3))
    pools = [ds.members(g).tolist() for g in range(ds.m)]
    dist = ds.pairwise(np.arange(ds.n))
    val, best, _ = exhaustive_maxmin(dist, pools, list(spec))
    plain = max(ds.diversity([u for part in parts for u in part])
                for parts in itertools.product(*(itertools.combinations(p, k) for p, k in zip(pools, spec))))
    assert val == plain
    assert ds.diversity(best) == val
