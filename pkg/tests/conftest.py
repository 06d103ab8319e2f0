import os

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

from fairdiv import Dataset

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=400, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def line(coords, groups, ids=None):
    """Points on the real line."""
    return Dataset.from_points(np.asarray(coords, dtype=float)[:, None], groups, ids=ids)


@pytest.fixture
def black_white():
    # blacks at 0, 4, 10 and a single white at 4.5
    return line([0, 4, 10, 4.5], ["black", "black", "black", "white"])


@st.composite
def disjoint_instances(draw, m_min=1, m_max=3, n_max=10, dim=2):
    m = draw(st.integers(m_min, m_max))
    n = draw(st.integers(max(m, 2), n_max))
    coords = draw(st.lists(st.lists(st.integers(-20, 20), min_size=dim, max_size=dim),
                           min_size=n, max_size=n))
    base = list(range(m)) + draw(st.lists(st.integers(0, m - 1), min_size=n - m, max_size=n - m))
    groups = [f"g{g}" for g in base]
    return Dataset.from_points(np.array(coords, dtype=float), groups, labels=[f"g{i}" for i in range(m)])


@st.composite
def fair_counts(draw, ds, k_max=4):
    sizes = ds.group_sizes()
    ks = [draw(st.integers(0, min(s, k_max))) for s in sizes]
    if sum(ks) == 0:
        g = draw(st.integers(0, ds.m - 1))
        ks[g] = 1
    return tuple(ks)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
