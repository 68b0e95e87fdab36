"""File formats.

* Tables (points, features): CSV with header ``id,<col>,...``.
* Square matrices (adjacency, dissimilarity): CSV whose header row is
  ``id,<id_1>,...,<id_n>`` and whose rows start with the matching id.
* Labels: CSV ``id,cluster``.
* Merge trees: JSON, see :func:`tree_to_json`.

CSV floats are written with 17 significant digits; JSON floats use Python's
shortest round-trip representation.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import MergeTree
from .errors import FormatError, IdMismatch

__all__ = [
    "read_table",
    "write_table",
    "read_square",
    "write_square",
    "read_labels",
    "write_labels",
    "tree_to_json",
    "tree_from_json",
    "read_tree",
    "write_tree",
    "dump_json",
]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _read_rows(path) -> list[list[str]]:
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    rows = [row for row in csv.reader(io.StringIO(text)) if any(cell.strip() for cell in row)]
    if not rows:
        raise FormatError(f"{path} is empty")
    return [[cell.strip() for cell in row] for row in rows]


def _parse_floats(cells, path, lineno) -> list[float]:
    try:
        return [float(c) for c in cells]
    except ValueError as exc:
        raise FormatError(f"{path}, line {lineno}: non-numeric value ({exc})") from exc


def _check_unique(ids, path):
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise FormatError(f"{path}: duplicate id {dup!r}")


def read_table(path) -> tuple[tuple, list[str], np.ndarray]:
    """Read an ``id,<columns>`` CSV into ``(ids, column_names, values)``."""
    rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    if len(header) < 2 or header[0].lower() != "id":
        raise FormatError(f"{path}: header must start with 'id' followed by at least one column")
    if not body:
        raise FormatError(f"{path}: no data rows")
    width = len(header)
    values = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != width:
            raise FormatError(f"{path}, line {lineno}: expected {width} fields, found {len(row)}")
        values.append(_parse_floats(row[1:], path, lineno))
    ids = tuple(row[0] for row in body)
    _check_unique(list(ids), path)
    return ids, header[1:], np.array(values, dtype=float)


def write_table(path, ids, columns, values) -> None:
    values = np.asarray(values)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *columns])
        for i, row in zip(ids, values):
            w.writerow([i, *(_fmt(v) for v in np.atleast_1d(row))])


def read_square(path) -> tuple[tuple, np.ndarray]:
    """Read a square matrix CSV with an id header row and id first column."""
    rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    if len(header) < 2 or header[0].lower() != "id":
        raise FormatError(f"{path}: header must be 'id' followed by the sample ids")
    ids = tuple(header[1:])
    _check_unique(list(ids), path)
    if len(body) != len(ids):
        raise FormatError(f"{path}: {len(ids)} columns but {len(body)} rows; matrix must be square")
    values = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(ids) + 1:
            raise FormatError(f"{path}, line {lineno}: expected {len(ids) + 1} fields, found {len(row)}")
        if row[0] != ids[lineno - 2]:
            raise FormatError(f"{path}, line {lineno}: row id {row[0]!r} does not match column id "
                              f"{ids[lineno - 2]!r}")
        values.append(_parse_floats(row[1:], path, lineno))
    return ids, np.array(values, dtype=float)


def write_square(path, ids, matrix, integer=False) -> None:
    m = np.asarray(matrix)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *ids])
        for i, row in zip(ids, m):
            cells = [str(int(v)) for v in row] if integer else [_fmt(v) for v in row]
            w.writerow([i, *cells])


def read_labels(path) -> tuple[tuple, np.ndarray]:
    ids, cols, values = read_table(path)
    if len(cols) != 1:
        raise FormatError(f"{path}: expected columns 'id,cluster'")
    if not np.all(values == np.round(values)):
        raise FormatError(f"{path}: cluster labels must be integers")
    return ids, values[:, 0].astype(np.int64)


def write_labels(path, ids, labels) -> None:
    write_table(path, ids, ["cluster"], np.asarray(labels, dtype=np.int64)[:, None])


def align(ids_ref, ids, what="input") -> np.ndarray:
    """Index array reordering ``ids`` to follow ``ids_ref``; both must hold the same set."""
    if tuple(ids) == tuple(ids_ref):
        return np.arange(len(ids))
    pos = {v: k for k, v in enumerate(ids)}
    if len(ids) != len(ids_ref) or set(pos) != set(ids_ref):
        missing = sorted(set(ids_ref) ^ set(pos))[:5]
        raise IdMismatch(f"{what} ids do not match (differences include {missing})")
    return np.array([pos[v] for v in ids_ref])


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def tree_to_json(tree: MergeTree) -> str:
    """Canonical JSON text of a merge tree.

    ``merges`` holds ``[left, right, height]`` triples, with ``-i`` for leaf
    ``i`` and ``t`` for merge step ``t`` (both 1-based).
    """
    obj = {
        "labels": list(tree.labels),
        "merges": [[int(l), int(r), float(h)] for (l, r), h in zip(tree.merges, tree.heights)],
        "n_components": int(tree.n_components),
        "linkage": tree.linkage,
        "metric": tree.metric,
        "squared": bool(tree.squared),
    }
    if tree.info:
        obj["provenance"] = tree.info
    return dump_json(obj)


def tree_from_json(text: str) -> MergeTree:
    try:
        obj = json.loads(text)
        labels = tuple(str(v) for v in obj["labels"])
        merges, heights = [], []
        for rec in obj["merges"]:
            left, right, h = rec
            if isinstance(left, bool) or isinstance(right, bool) or int(left) != left or int(right) != right:
                raise ValueError("node references must be integers")
            merges.append((int(left), int(right)))
            heights.append(float(h))
        n_components = int(obj["n_components"])
        linkage = obj.get("linkage", "ward")
        metric = obj.get("metric")
        squared = bool(obj.get("squared", False))
        info = obj.get("provenance") or {}
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"malformed tree JSON: {exc}") from exc
    n = len(labels)
    if len(merges) + n_components != n:
        raise FormatError(f"tree has {n} labels, {len(merges)} merges and {n_components} components")
    used = set()
    for t, (left, right) in enumerate(merges, start=1):
        for ref in (left, right):
            if ref == 0 or ref < -n or ref >= t or ref in used:
                raise FormatError(f"merge {t}: invalid or reused node reference {ref}")
            used.add(ref)
    return MergeTree(labels, tuple(merges), np.asarray(heights, dtype=float), n_components,
                     linkage, metric, squared, info)


def read_tree(path) -> MergeTree:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return tree_from_json(text)


def write_tree(path, tree: MergeTree) -> None:
    Path(path).write_text(tree_to_json(tree), encoding="utf-8")
