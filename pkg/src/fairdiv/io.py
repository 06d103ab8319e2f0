"""CSV ingestion/serialization and JSON result records."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import Dataset, DataError, Selection


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _split_groups(field: str, line: int) -> list[str]:
    labels = [g.strip() for g in field.split("|")]
    if not labels or any(not g for g in labels):
        raise ParseError(f"empty group label in {field!r}", line)
    if len(set(labels)) != len(labels):
        raise ParseError(f"repeated group label in {field!r}", line)
    return labels


def _check_ids(ids: list[str], lines: list[int]) -> None:
    seen: dict[str, int] = {}
    for i, ln in zip(ids, lines):
        if i in seen:
            raise ParseError(f"duplicate id {i!r} (first on line {seen[i]})", ln)
        seen[i] = ln


def read_points_csv(path, metric: str = "euclidean") -> Dataset:
    """Read ``id,groups,f1,...,fd``; ``groups`` is ``|``-separated."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", 1)
    header = [h.strip() for h in rows[0]]
    if len(header) < 3 or header[0] != "id" or header[1] != "groups":
        raise ParseError("header must be id,groups,f1,...,fd", 1)
    d = len(header) - 2
    ids, groups, feats, lines = [], [], [], []
    for ln, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != d + 2:
            raise ParseError(f"expected {d + 2} fields, got {len(row)}", ln)
        ids.append(row[0].strip())
        groups.append(_split_groups(row[1], ln))
        try:
            vals = [float(c) for c in row[2:]]
        except ValueError:
            raise ParseError(f"non-numeric feature in {row[2:]!r}", ln) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite feature", ln)
        feats.append(vals)
        lines.append(ln)
    if not ids:
        raise ParseError("no data rows", 2)
    _check_ids(ids, lines)
    return Dataset.from_points(np.array(feats), groups, ids=ids, metric=metric)


def read_matrix_csv(path, labels_path) -> Dataset:
    """Read a square numeric matrix (no header) plus an ``id,groups`` sidecar."""
    with open(labels_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0][:2]] != ["id", "groups"]:
        raise ParseError("labels file header must be id,groups", 1)
    ids, groups, lines = [], [], []
    for ln, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", ln)
        ids.append(row[0].strip())
        groups.append(_split_groups(row[1], ln))
        lines.append(ln)
    _check_ids(ids, lines)
    with open(path, newline="", encoding="utf-8") as fh:
        mrows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    mat = []
    for ln, row in enumerate(mrows, start=1):
        if len(row) != len(ids):
            raise ParseError(f"matrix row has {len(row)} entries, expected {len(ids)}", ln)
        try:
            mat.append([float(c) for c in row])
        except ValueError:
            raise ParseError("non-numeric matrix entry", ln) from None
    if len(mat) != len(ids):
        raise ParseError(f"matrix has {len(mat)} rows, labels file lists {len(ids)} ids")
    return Dataset.from_matrix(np.array(mat), groups, ids=ids)


def ingest(path, fmt: str = "points-csv", metric: str = "euclidean", labels_path=None) -> Dataset:
    if fmt == "points-csv":
        return read_points_csv(path, metric)
    if fmt == "matrix-csv":
        if labels_path is None:
            labels_path = Path(path).with_suffix(".labels.csv")
        return read_matrix_csv(path, labels_path)
    raise ParseError(f"unknown format {fmt!r}")


def write_points_csv(ds: Dataset, path) -> None:
    if ds.points is None:
        raise ValueError("matrix-backed datasets are written with write_matrix_csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "groups"] + [f"f{j + 1}" for j in range(ds.points.shape[1])])
        for u in range(ds.n):
            labs = "|".join(ds.labels[g] for g in sorted(ds.memberships[u]))
            w.writerow([ds.ids[u], labs] + [repr(float(x)) for x in ds.points[u]])


def write_matrix_csv(ds: Dataset, path, labels_path) -> None:
    mat = ds.matrix if ds.matrix is not None else ds.pairwise(np.arange(ds.n))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for row in mat:
            w.writerow([repr(float(x)) for x in row])
    with open(labels_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "groups"])
        for u in range(ds.n):
            w.writerow([ds.ids[u], "|".join(ds.labels[g] for g in sorted(ds.memberships[u]))])


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf"
    if math.isnan(x):
        return None
    return x


def result_record(ds: Dataset, res) -> dict:
    """Deterministic record for a Selection or ClusterResult (no timing)."""
    if isinstance(res, Selection):
        ids, objective, key = res.chosen, res.diversity, "diversity"
    else:
        ids, objective, key = res.centers, res.radius, "radius"
    return {
        "algorithm": res.algorithm,
        "gamma_used": _num(res.gamma_used),
        key: _num(objective),
        "selected": [{"id": ds.ids[u], "groups": [ds.labels[g] for g in sorted(ds.memberships[u])]}
                     for u in ids],
        "per_group_counts": dict(zip(ds.labels, res.per_group_counts)),
        "probes": res.probes,
        "aborted": res.aborted,
    }


def dumps(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True) + "\n"
