"""Farthest-first traversal with an optional initial set."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset


@dataclass
class GmmState:
    """Result of a traversal.

    ``min_dist[j]`` is the distance of ``universe[j]`` to the nearest point of
    ``initial + selected``; ``gains[j]`` is the min-distance of
    ``selected[j]`` to everything picked before it (``inf`` for a random
    first pick with no initial set).
    """

    universe: np.ndarray
    selected: list[int] = field(default_factory=list)
    gains: list[float] = field(default_factory=list)
    min_dist: np.ndarray | None = None
    evals: int = 0


def gmm(
    ds: Dataset,
    universe,
    initial=(),
    k: int = 1,
    seed: int | None = 0,
    first: int | None = None,
    stop_below: float | None = None,
) -> GmmState:
    """Greedily add up to ``k`` points of ``universe`` farthest from everything chosen.

    With an empty ``initial`` the first point is drawn with
    ``np.random.default_rng(seed)`` (or is ``first`` if given). Ties go to the
    smallest id. Returns fewer than ``k`` points when the universe runs out.
    With ``stop_below`` the traversal also stops once the best gain drops
    below that value, which yields a maximal subset that is ``stop_below``
    separated.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    universe = np.unique(np.asarray(universe, dtype=np.intp))
    initial = [int(u) for u in initial]
    state = GmmState(universe=universe)
    if k > 0 and universe.size == 0:
        raise ValueError("cannot select from an empty universe")

    taken = np.zeros(universe.size, dtype=bool)
    min_dist = np.full(universe.size, math.inf)
    for s in initial:
        np.minimum(min_dist, ds.dists(s, universe), out=min_dist)
        state.evals += universe.size
    pos = np.searchsorted(universe, initial)
    for p, s in zip(pos, initial):
        if p < universe.size and universe[p] == s:
            taken[p] = True

    def take(j: int, gain: float) -> None:
        u = int(universe[j])
        taken[j] = True
        state.selected.append(u)
        state.gains.append(gain)
        np.minimum(min_dist, ds.dists(u, universe), out=min_dist)
        state.evals += universe.size

    available = int(universe.size - taken.sum())
    target = min(k, available)
    if target > 0 and not initial:
        if first is not None:
            j = int(np.searchsorted(universe, first))
            if j >= universe.size or universe[j] != first:
                raise ValueError(f"first point {first} is not in the universe")
        else:
            j = int(np.random.default_rng(seed).integers(universe.size))
        take(j, math.inf)

    masked = np.where(taken, -math.inf, min_dist)
    while len(state.selected) < target:
        j = int(np.argmax(masked))
        gain = float(masked[j])
        if stop_below is not None and gain < stop_below:
            break
        take(j, gain)
        masked = np.where(taken, -math.inf, min_dist)
    state.min_dist = min_dist
    return state
