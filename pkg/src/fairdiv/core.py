"""Shared domain types: datasets, distances, fairness constraints, results."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

DISJOINT = "disjoint"
OVERLAPPING = "overlapping"

METRICS = ("euclidean", "manhattan", "precomputed")

# singleton selections have no pairs; min over the empty set
INF_DIVERSITY = math.inf


class FairDivError(Exception):
    """Base class for library errors."""


class InfeasibleSpecError(FairDivError):
    pass


class BudgetExceededError(FairDivError):
    def __init__(self, message: str, count: int | float | None = None):
        super().__init__(message)
        self.count = count


class DataError(FairDivError):
    """Malformed dataset or constraint input."""


class InvariantViolation(AssertionError):
    """An internal guarantee (e.g. a component-diameter bound) did not hold."""


def _pairwise_metric(a: np.ndarray, b: np.ndarray, kind: str) -> np.ndarray:
    # Coordinates are accumulated in a fixed order so the vectorized and the
    # scalar path produce bit-identical values.
    diff = a - b
    acc = np.zeros(diff.shape[:-1], dtype=float)
    if kind == "euclidean":
        for j in range(diff.shape[-1]):
            acc += diff[..., j] * diff[..., j]
        return np.sqrt(acc)
    for j in range(diff.shape[-1]):
        acc += np.abs(diff[..., j])
    return acc


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable universe of elements with group memberships.

    Element ids are dense integers ``0..n-1``; ``ids`` keeps the external
    string ids for I/O. ``memberships[u]`` is the frozenset of group indices
    of element ``u`` and ``labels[i]`` the name of group ``i``.
    """

    ids: tuple[str, ...]
    labels: tuple[str, ...]
    memberships: tuple[frozenset[int], ...]
    mode: str
    metric: str
    points: np.ndarray | None = None
    matrix: np.ndarray | None = None
    _group_members: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.ids)
        if n == 0:
            raise DataError("dataset is empty")
        if len(set(self.ids)) != n:
            raise DataError("duplicate element ids")
        if len(self.memberships) != n:
            raise DataError("memberships length does not match ids")
        if not self.labels or len(set(self.labels)) != len(self.labels):
            raise DataError("group labels must be non-empty and unique")
        if self.mode not in (DISJOINT, OVERLAPPING):
            raise DataError(f"unknown mode {self.mode!r}")
        if self.metric not in METRICS:
            raise DataError(f"unknown metric {self.metric!r}")
        m = len(self.labels)
        for u, mem in enumerate(self.memberships):
            if not mem:
                raise DataError(f"element {self.ids[u]!r} has no group")
            if self.mode == DISJOINT and len(mem) != 1:
                raise DataError(f"element {self.ids[u]!r} has {len(mem)} groups in disjoint mode")
            if any(not 0 <= g < m for g in mem):
                raise DataError(f"element {self.ids[u]!r} has an out-of-range group index")
        if self.metric == "precomputed":
            mat = np.asarray(self.matrix, dtype=float)
            if mat.shape != (n, n):
                raise DataError(f"distance matrix has shape {mat.shape}, expected {(n, n)}")
            if not np.all(np.isfinite(mat)) or np.any(mat < 0):
                raise DataError("distance matrix must be finite and non-negative")
            mat = mat.copy()
            mat.setflags(write=False)
            object.__setattr__(self, "matrix", mat)
            object.__setattr__(self, "points", None)
        else:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[0] != n or pts.shape[1] < 1:
                raise DataError("points must be an (n, d) array with d >= 1")
            if not np.all(np.isfinite(pts)):
                raise DataError("points must be finite")
            pts = pts.copy()
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "matrix", None)
        members = [[] for _ in range(m)]
        for u, mem in enumerate(self.memberships):
            for g in mem:
                members[g].append(u)
        for g, mem in enumerate(members):
            if not mem:
                raise DataError(f"group {self.labels[g]!r} has no elements")
        arrs = tuple(np.asarray(mem, dtype=np.intp) for mem in members)
        for a in arrs:
            a.setflags(write=False)
        object.__setattr__(self, "_group_members", arrs)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_points(
        cls,
        points,
        groups: Sequence,
        ids: Sequence[str] | None = None,
        metric: str = "euclidean",
        mode: str | None = None,
        labels: Sequence[str] | None = None,
    ) -> "Dataset":
        """Build a dataset from feature vectors.

        ``groups[u]`` is either one label or an iterable of labels. The mode
        is inferred (any multi-label element makes it overlapping) unless
        given explicitly.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls._build(groups, ids, metric, mode, labels, points=pts)

    @classmethod
    def from_matrix(
        cls,
        matrix,
        groups: Sequence,
        ids: Sequence[str] | None = None,
        mode: str | None = None,
        labels: Sequence[str] | None = None,
    ) -> "Dataset":
        return cls._build(groups, ids, "precomputed", mode, labels, matrix=np.asarray(matrix, dtype=float))

    @classmethod
    def _build(cls, groups, ids, metric, mode, labels, points=None, matrix=None):
        label_sets = [_as_label_tuple(g) for g in groups]
        if labels is None:
            order: dict[str, int] = {}
            for ls in label_sets:
                for lab in ls:
                    order.setdefault(lab, len(order))
            labels = tuple(order)
        labels = tuple(str(x) for x in labels)
        index = {lab: i for i, lab in enumerate(labels)}
        memberships = []
        for ls in label_sets:
            try:
                memberships.append(frozenset(index[lab] for lab in ls))
            except KeyError as exc:
                raise DataError(f"unknown group label {exc.args[0]!r}") from None
        if mode is None:
            mode = OVERLAPPING if any(len(mm) > 1 for mm in memberships) else DISJOINT
        if ids is None:
            ids = [str(i) for i in range(len(memberships))]
        return cls(
            ids=tuple(str(i) for i in ids),
            labels=labels,
            memberships=tuple(memberships),
            mode=mode,
            metric=metric,
            points=points,
            matrix=matrix,
        )

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.labels)

    def members(self, group: int) -> np.ndarray:
        """Sorted element ids of group ``group`` (read-only array)."""
        return self._group_members[group]

    def group_sizes(self) -> list[int]:
        return [len(a) for a in self._group_members]

    def label_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DataError(f"unknown group label {label!r}") from None

    # -- distances ----------------------------------------------------------

    def _check(self, u) -> int:
        u = int(u)
        if not 0 <= u < self.n:
            raise IndexError(f"element id {u} out of range [0, {self.n})")
        return u

    def distance(self, u, v) -> float:
        u, v = self._check(u), self._check(v)
        if self.matrix is not None:
            return float(self.matrix[u, v])
        return float(_pairwise_metric(self.points[v][None, :], self.points[u], self.metric)[0])

    def dists(self, u, idx) -> np.ndarray:
        """Distances from element ``u`` to every element of ``idx``."""
        u = self._check(u)
        idx = np.asarray(idx, dtype=np.intp)
        if self.matrix is not None:
            return np.asarray(self.matrix[u, idx], dtype=float)
        return _pairwise_metric(self.points[idx], self.points[u], self.metric)

    def pairwise(self, idx) -> np.ndarray:
        """Full distance matrix among the elements of ``idx``."""
        idx = np.asarray(idx, dtype=np.intp)
        if self.matrix is not None:
            return np.array(self.matrix[np.ix_(idx, idx)], dtype=float)
        pts = self.points[idx]
        return _pairwise_metric(pts[None, :, :], pts[:, None, :], self.metric)

    def diversity(self, s: Iterable[int]) -> float:
        s = list(s)
        if not s:
            raise ValueError("diversity of an empty set is undefined")
        if len(s) == 1:
            return INF_DIVERSITY
        d = self.pairwise(s)
        iu = np.triu_indices(len(s), k=1)
        return float(d[iu].min())

    def radius(self, centers: Iterable[int]) -> float:
        """Covering radius: max over all elements of the distance to the nearest center."""
        centers = list(centers)
        if not centers:
            raise ValueError("radius of an empty center set is undefined")
        everything = np.arange(self.n)
        best = self.dists(centers[0], everything)
        for c in centers[1:]:
            np.minimum(best, self.dists(c, everything), out=best)
        return float(best.max())

    def counts(self, s: Iterable[int]) -> list[int]:
        out = [0] * self.m
        for u in s:
            for g in self.memberships[int(u)]:
                out[g] += 1
        return out

    def subset(self, idx: Sequence[int]) -> "Dataset":
        """Restriction to ``idx`` (ids and labels preserved, empty groups dropped)."""
        idx = [int(i) for i in idx]
        groups = [[self.labels[g] for g in sorted(self.memberships[u])] for u in idx]
        ids = [self.ids[u] for u in idx]
        if self.matrix is not None:
            return Dataset.from_matrix(self.matrix[np.ix_(idx, idx)], groups, ids=ids, mode=self.mode)
        return Dataset.from_points(self.points[idx], groups, ids=ids, metric=self.metric, mode=self.mode)


def _as_label_tuple(g) -> tuple[str, ...]:
    if isinstance(g, str):
        return (g,)
    if isinstance(g, (int, np.integer)):
        return (str(g),)
    out = tuple(str(x) for x in g)
    if len(set(out)) != len(out):
        raise DataError(f"repeated label in {g!r}")
    return out


@dataclass(frozen=True)
class MetricReport:
    asymmetric: list[tuple[int, int, float]]
    nonzero_diagonal: list[tuple[int, float]]
    triangle: list[tuple[int, int, int, float]]
    exhaustive: bool

    @property
    def ok(self) -> bool:
        return not (self.asymmetric or self.nonzero_diagonal or self.triangle)


def validate_pseudometric(
    ds: Dataset, tolerance: float = 1e-9, max_exhaustive: int = 500, samples: int = 200_000, seed: int = 0
) -> MetricReport:
    """Check symmetry, zero diagonal and the triangle inequality.

    ``tolerance`` is relative to the largest entry. Triangle checks are
    exhaustive for ``n <= max_exhaustive`` and sampled otherwise.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    n = ds.n
    mat = ds.matrix if ds.matrix is not None else ds.pairwise(np.arange(n))
    scale = float(mat.max()) if n else 0.0
    tol = tolerance * max(scale, 1.0)

    asym = [(int(i), int(j), float(mat[i, j] - mat[j, i]))
            for i, j in zip(*np.nonzero(np.abs(mat - mat.T) > tol)) if i < j]
    diag = [(int(i), float(mat[i, i])) for i in np.nonzero(np.abs(np.diag(mat)) > tol)[0]]

    tri: list[tuple[int, int, int, float]] = []
    exhaustive = n <= max_exhaustive
    if exhaustive:
        # d(i,k) <= d(i,j) + d(j,k) for every middle point j
        for j in range(n):
            excess = mat - (mat[:, j][:, None] + mat[j, :][None, :])
            for i, k in zip(*np.nonzero(excess > tol)):
                if i < k and j != i and j != k:
                    tri.append((int(i), int(j), int(k), float(excess[i, k])))
    else:
        rng = np.random.default_rng(seed)
        trip = rng.integers(0, n, size=(samples, 3))
        i, j, k = trip[:, 0], trip[:, 1], trip[:, 2]
        excess = mat[i, k] - (mat[i, j] + mat[j, k])
        for t in np.nonzero(excess > tol)[0]:
            tri.append((int(i[t]), int(j[t]), int(k[t]), float(excess[t])))
    return MetricReport(asym, diag, tri, exhaustive)


@dataclass(frozen=True)
class FairnessSpec:
    """Per-group required counts, aligned with ``Dataset.labels``."""

    counts: tuple[int, ...]
    mode: str = DISJOINT

    @property
    def k_total(self) -> int:
        return sum(self.counts)

    @property
    def m(self) -> int:
        return len(self.counts)

    @classmethod
    def from_mapping(cls, ds: Dataset, counts: Mapping[str, int]) -> "FairnessSpec":
        """Unlisted groups get zero; unknown labels are rejected."""
        ks = [0] * ds.m
        for label, k in counts.items():
            k = int(k)
            if k < 0:
                raise DataError(f"negative count for group {label!r}")
            ks[ds.label_index(str(label))] = k
        return cls(tuple(ks), ds.mode)

    @classmethod
    def parse(cls, ds: Dataset, text: str) -> "FairnessSpec":
        """Parse ``"urban=3,rural=2"``."""
        counts: dict[str, int] = {}
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            label, sep, value = part.partition("=")
            if not sep:
                raise DataError(f"bad constraint {part!r}, expected label=count")
            try:
                counts[label.strip()] = int(value)
            except ValueError:
                raise DataError(f"bad count in constraint {part!r}") from None
        return cls.from_mapping(ds, counts)

    def validate(self, ds: Dataset) -> "FairnessSpec":
        if len(self.counts) != ds.m:
            raise InfeasibleSpecError(f"constraint vector has {len(self.counts)} entries, dataset has {ds.m} groups")
        if any(k < 0 for k in self.counts):
            raise InfeasibleSpecError("negative group count")
        sizes = ds.group_sizes()
        for label, k, size in zip(ds.labels, self.counts, sizes):
            if k > size:
                raise InfeasibleSpecError(f"group {label!r} needs {k} elements but has only {size}")
        if self.k_total < 1:
            raise InfeasibleSpecError("at least one element must be requested")
        return self

    def as_dict(self, ds: Dataset) -> dict[str, int]:
        return dict(zip(ds.labels, self.counts))


@dataclass
class Selection:
    chosen: tuple[int, ...]
    diversity: float
    per_group_counts: tuple[int, ...]
    algorithm: str
    gamma_used: float | None = None
    aborted: bool = False
    probes: int = 0
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def build(cls, ds: Dataset, chosen: Sequence[int], algorithm: str, **kw) -> "Selection":
        chosen = tuple(int(u) for u in chosen)
        if len(set(chosen)) != len(chosen):
            raise InvariantViolation(f"{algorithm} selected a point twice: {chosen}")
        div = ds.diversity(chosen) if chosen else math.nan
        return cls(chosen, div, tuple(ds.counts(chosen)), algorithm, **kw)

    @classmethod
    def abort(cls, ds: Dataset, algorithm: str, **kw) -> "Selection":
        return cls((), math.nan, (0,) * ds.m, algorithm, aborted=True, **kw)


def check_exact_counts(ds: Dataset, spec: FairnessSpec, sel: Selection) -> None:
    if tuple(sel.per_group_counts) != tuple(spec.counts):
        raise InvariantViolation(f"{sel.algorithm}: counts {sel.per_group_counts} != required {spec.counts}")


def check_min_counts(ds: Dataset, spec: FairnessSpec, sel: Selection) -> None:
    if any(c < k for c, k in zip(sel.per_group_counts, spec.counts)):
        raise InvariantViolation(f"{sel.algorithm}: counts {sel.per_group_counts} below required {spec.counts}")


def require_mode(ds: Dataset, mode: str, algorithm: str) -> None:
    if ds.mode != mode:
        raise InfeasibleSpecError(f"{algorithm} requires a {mode} dataset, got {ds.mode}")


def n_choose(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


def label_sets(m: int, size: int) -> list[frozenset[int]]:
    """All subsets of ``range(m)`` of the given size, lexicographic."""
    return [frozenset(c) for c in itertools.combinations(range(m), size)]
