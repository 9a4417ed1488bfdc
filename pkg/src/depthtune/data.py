"""Tabular dataset loading and preparation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class SupervisedDataset:
    features: np.ndarray
    targets: np.ndarray
    column_names: list = field(default_factory=list)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if targets.shape != (features.shape[0],):
            raise ValueError("targets must be 1-D with one entry per feature row")
        if features.shape[0] < 1:
            raise ValueError("dataset has no rows")
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
            raise ValueError("dataset contains missing or non-finite values")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)
        names = list(self.column_names) or [f"x{i}" for i in range(features.shape[1])]
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray


def load_csv(path, target_column=-1, has_header=True):
    """Read a numeric CSV; ``target_column`` is a header name or an index.

    A target column holding non-numeric labels is encoded as 0, 1, 2, ...
    in order of first appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if has_header:
        if not rows:
            raise ValueError(f"{path}: empty file")
        header, rows = [h.strip() for h in rows[0]], rows[1:]
    else:
        header = [f"x{i}" for i in range(len(rows[0]))] if rows else []
    if not rows:
        raise ValueError(f"{path}: no data rows")

    if isinstance(target_column, str) and not target_column.lstrip("-").isdigit():
        if target_column not in header:
            raise ValueError(f"{path}: target column {target_column!r} not found")
        tcol = header.index(target_column)
    else:
        tcol = int(target_column)
        if not -len(header) <= tcol < len(header):
            raise ValueError(f"{path}: target column index {tcol} out of range")
        tcol %= len(header)

    feats, raw_targets = [], []
    for lineno, row in enumerate(rows, start=2 if has_header else 1):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        vals = []
        for col, cell in enumerate(row):
            if col == tcol:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric value {cell!r} at row {lineno}, column {col + 1}"
                ) from None
        feats.append(vals)
        raw_targets.append(row[tcol].strip())

    try:
        targets = [float(t) for t in raw_targets]
    except ValueError:
        codes = {}
        targets = [codes.setdefault(t, len(codes)) for t in raw_targets]

    names = [h for i, h in enumerate(header) if i != tcol]
    return SupervisedDataset(np.array(feats, dtype=np.float64).reshape(len(rows), -1),
                             np.array(targets, dtype=np.float64), names)


def write_csv(ds, path, target_name="target"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.column_names) + [target_name])
        for x, y in zip(ds.features, ds.targets):
            w.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def take_top(ds, k):
    if not 1 <= k <= ds.n_rows:
        raise ValueError(f"k={k} outside [1, {ds.n_rows}]")
    return SupervisedDataset(ds.features[:k].copy(), ds.targets[:k].copy(), ds.column_names)


def take_rows(ds, start, stop):
    if not 0 <= start < stop <= ds.n_rows:
        raise ValueError(f"row range [{start}, {stop}) outside dataset of {ds.n_rows} rows")
    return SupervisedDataset(ds.features[start:stop].copy(), ds.targets[start:stop].copy(),
                             ds.column_names)


def column_stats(features, ddof=0):
    features = np.asarray(features, dtype=np.float64)
    return NormStats(features.mean(axis=0), features.std(axis=0, ddof=ddof))


def apply_stats(features, stats):
    std = np.where(stats.std > 0, stats.std, 1.0)
    out = (features - stats.mean) / std
    out[:, stats.std == 0] = 0.0
    return out


def normalize(ds, ddof=0):
    """Z-score every feature column; zero-variance columns become 0.

    Uses the population standard deviation unless ``ddof=1``.
    """
    if ddof == 1 and ds.n_rows < 2:
        raise ValueError("sample standard deviation needs at least two rows")
    stats = column_stats(ds.features, ddof)
    return SupervisedDataset(apply_stats(ds.features, stats), ds.targets.copy(),
                             ds.column_names), stats


def split(ds, test_fraction, seed):
    """Seeded shuffle followed by a train/test cut; both parts keep >= 1 row."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    n = ds.n_rows
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n_test >= n:
        raise ValueError(f"cannot split {n} rows with test_fraction={test_fraction}")
    order = np.random.default_rng(seed).permutation(n)
    test_idx, train_idx = order[:n_test], order[n_test:]

    def part(idx):
        return SupervisedDataset(ds.features[idx], ds.targets[idx], ds.column_names)

    return part(train_idx), part(test_idx)


def bundled_path(name):
    return resources.files("depthtune") / "datasets" / f"{name}.csv"


def load_boston():
    """The 506-row Boston housing table; target is MEDV."""
    with resources.as_file(bundled_path("boston")) as p:
        return load_csv(p, target_column="MEDV")


def load_iris():
    """The 150-row iris table; species names are encoded 0, 1, 2."""
    with resources.as_file(bundled_path("iris")) as p:
        return load_csv(p, target_column="species")
