"""Datasets: synthetic XOR Gaussians, CSV I/O, splitting, balancing, normalisation."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

DEFAULT_MEANS = ((2.0, 2.0), (-2.0, -2.0), (2.0, -2.0), (-2.0, 2.0))
# class of each default component: same-sign quadrants are class 0
DEFAULT_LABELS = (0, 0, 1, 1)
DEFAULT_SIGMA = 1.05


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y).reshape(-1)
        if X.ndim != 2:
            raise DataError(f"features must be a 2-D table, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if X.shape[0] < 1:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite feature values")
        if np.any((y != 0) & (y != 1)):
            raise DataError("labels must be 0 or 1")
        names = tuple(self.feature_names) or tuple(f"x{i + 1}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int64))
        object.__setattr__(self, "feature_names", names)

    def __len__(self):
        return self.X.shape[0]

    @property
    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.y == 0)), int(np.sum(self.y == 1))

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.feature_names)


def gen_synthetic(n: int = 5000, seed: int = 0, means=DEFAULT_MEANS, sigma: float = DEFAULT_SIGMA,
                  labels=DEFAULT_LABELS) -> Dataset:
    """Draw ``n`` points from four isotropic bivariate normals in an XOR layout.

    Components get ``n // 4`` points each, the remainder going to the first
    components.  Rows are ordered component by component.
    """
    if n < 4:
        raise DataError("need at least 4 points")
    if not sigma > 0:
        raise DataError("sigma must be positive")
    means = np.asarray(means, dtype=float)
    if means.shape != (4, 2):
        raise DataError("expected four 2-D component means")
    # one child stream per component keeps components independent of each other
    streams = np.random.SeedSequence(seed).spawn(4)
    sizes = [n // 4 + (1 if k < n % 4 else 0) for k in range(4)]
    Xs, ys = [], []
    for k in range(4):
        rng = np.random.default_rng(streams[k])
        Xs.append(means[k] + sigma * rng.standard_normal((sizes[k], 2)))
        ys.append(np.full(sizes[k], labels[k]))
    return Dataset(np.vstack(Xs), np.concatenate(ys), ("x1", "x2"))


def split(data: Dataset, train_fraction: float = 0.6, seed: int = 0) -> tuple[Dataset, Dataset]:
    if not 0 < train_fraction < 1:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    n = len(data)
    n_train = int(round(n * train_fraction))
    if n_train < 1 or n_train >= n:
        raise DataError(f"split of {n} rows at {train_fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(n)
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


def balance_classes(data: Dataset, seed: int = 0) -> Dataset:
    """Subsample the majority class without replacement down to the minority count."""
    n0, n1 = data.class_counts
    if n0 == 0 or n1 == 0:
        raise DataError("both classes must be present to balance")
    major = 0 if n0 > n1 else 1
    keep_major = np.flatnonzero(data.y == major)
    minor = np.flatnonzero(data.y != major)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(keep_major, size=minor.shape[0], replace=False)
    return data.subset(np.sort(np.concatenate([minor, chosen])))


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Affine map ``x' = scale * (x - center)`` with ``scale = 2 / range``."""

    scale: np.ndarray
    center: np.ndarray
    feature_names: tuple = ()

    def apply(self, data):
        if isinstance(data, Dataset):
            return Dataset(self.transform(data.X), data.y, data.feature_names)
        return self.transform(data)

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.scale.shape[0]:
            raise DataError(f"normaliser expects {self.scale.shape[0]} features, got {X.shape[-1]}")
        return (X - self.center) * self.scale

    def inverse(self, Z):
        return np.asarray(Z, dtype=float) / self.scale + self.center

    def to_dict(self) -> dict:
        return {"scale": self.scale.tolist(), "center": self.center.tolist(),
                "feature_names": list(self.feature_names)}

    @classmethod
    def from_dict(cls, doc: dict) -> "Normalizer":
        return cls(np.asarray(doc["scale"], float), np.asarray(doc["center"], float),
                   tuple(doc.get("feature_names", ())))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def normalizer_fit(train: Dataset) -> Normalizer:
    X = train.X
    ranges = X.max(axis=0) - X.min(axis=0)
    if np.any(ranges <= 0):
        bad = [train.feature_names[i] for i in np.flatnonzero(ranges <= 0)]
        raise DataError(f"constant features cannot be normalised: {', '.join(bad)}")
    return Normalizer(2.0 / ranges, X.mean(axis=0), train.feature_names)


def normalizer_apply(norm: Normalizer, data: Dataset) -> Dataset:
    return norm.apply(data)


def save_csv(data: Dataset, path, comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow([*data.feature_names, "y"])
        for row, label in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


def load_csv(path) -> Dataset:
    """Read a headed CSV whose final column ``y`` holds 0/1 labels.

    Lines starting with ``#`` are skipped.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        rows = [(k, r) for k, r in enumerate(csv.reader(fh), start=1)
                if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DataError(f"{path}: no header row")
    lineno, header = rows[0]
    header = [h.strip() for h in header]
    if header[-1] != "y":
        raise DataError(f"{path}:{lineno}: missing header row ending in a 'y' column, got {header!r}")
    X, y = [], []
    for lineno, r in rows[1:]:
        if len(r) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(r)}")
        try:
            vals = [float(v) for v in r[:-1]]
            label = float(r[-1])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if label not in (0.0, 1.0):
            raise DataError(f"{path}:{lineno}: label {r[-1]!r} is not 0 or 1")
        X.append(vals)
        y.append(int(label))
    if not X:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(X), np.array(y), tuple(header[:-1]))
