"""Tabular datasets: CSV I/O, splitting, standardization, synthetic generators.

A Dataset is an immutable bundle of a float feature matrix and a float
target vector. All loaders and transforms return new Dataset objects; the
underlying arrays are marked read-only so shared references stay safe.
"""

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    InvalidFraction,
    MissingFile,
    MissingTargetColumn,
    NonNumericCell,
    TooFewRows,
    UnknownKind,
)

SYNTH_KINDS = ("linear", "friedman1", "piecewise")


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An immutable (features, targets) table.

    features is (n, m) float64, targets is (n,) float64, with n >= 2 rows
    and m >= 1 columns, all values finite.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple
    target_name: str

    def __post_init__(self):
        X = _frozen(self.features)
        y = _frozen(self.targets)
        if X.ndim != 2:
            raise DimensionMismatch(f"features must be 2-D, got {X.ndim}-D")
        if y.ndim != 1:
            raise DimensionMismatch(f"targets must be 1-D, got {y.ndim}-D")
        n, m = X.shape
        if m < 1:
            raise EmptyDataset("need at least one feature column")
        if n < 2:
            raise EmptyDataset(f"need at least two rows, got {n}")
        if y.shape[0] != n:
            raise DimensionMismatch(
                f"{n} feature rows but {y.shape[0]} target values"
            )
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise EmptyDataset("features and targets must be finite")
        names = tuple(str(c) for c in self.feature_names)
        if len(names) != m:
            raise DimensionMismatch(
                f"{m} feature columns but {len(names)} feature names"
            )
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "target_name", str(self.target_name))

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def m(self):
        return self.features.shape[1]

    def take(self, indices):
        """New Dataset holding the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[idx], self.targets[idx], self.feature_names, self.target_name
        )


@dataclass(frozen=True)
class SplitPair:
    """A train/test partition plus the parameters that produced it."""

    train: Dataset
    test: Dataset
    seed: int
    test_fraction: float


def load_csv(path, target_column):
    """Read a UTF-8, comma-separated, headered CSV into a Dataset.

    The named target column becomes the target vector; every other column
    is a feature, in file order. Any cell that does not parse as a float
    raises NonNumericCell with its 1-based data row and column name.
    """
    if not os.path.isfile(path):
        raise MissingFile(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise MissingTargetColumn(
                f"column {target_column!r} not in header {header}"
            )
        t_pos = header.index(target_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != t_pos)
        feat_rows = []
        targets = []
        for row_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue
            if len(row) != len(header):
                raise DimensionMismatch(
                    f"row {row_no} has {len(row)} cells, header has {len(header)}"
                )
            vals = []
            for i, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise NonNumericCell(row_no, header[i]) from None
                if i == t_pos:
                    targets.append(v)
                else:
                    vals.append(v)
            feat_rows.append(vals)
    if len(feat_rows) < 2:
        raise EmptyDataset(f"{path} has {len(feat_rows)} data rows, need at least 2")
    return Dataset(
        np.array(feat_rows, dtype=np.float64),
        np.array(targets, dtype=np.float64),
        feature_names,
        target_column,
    )


def write_csv(dataset, path):
    """Write a Dataset back to CSV, features first and target last.

    Values are rendered with 17 significant digits so a load round-trips
    to the exact same floats.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [dataset.target_name])
        for i in range(dataset.n):
            row = [f"{v:.17g}" for v in dataset.features[i]]
            row.append(f"{dataset.targets[i]:.17g}")
            writer.writerow(row)


def train_test_split(dataset, test_fraction, seed):
    """Split rows into disjoint train and test Datasets.

    Row indices are shuffled by a generator seeded with ``seed``; the first
    ceil(n * test_fraction) shuffled rows become the test set and the rest
    the train set. Both sides must end up with at least two rows.
    """
    if not (0.0 < test_fraction < 1.0):
        raise InvalidFraction(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = dataset.n
    n_test = math.ceil(n * test_fraction)
    n_train = n - n_test
    if n_test < 2 or n_train < 2:
        raise TooFewRows(
            f"split of {n} rows at {test_fraction} gives {n_train}/{n_test}, "
            "need at least 2 rows on each side"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return SplitPair(
        train=dataset.take(perm[n_test:]),
        test=dataset.take(perm[:n_test]),
        seed=int(seed),
        test_fraction=float(test_fraction),
    )


@dataclass(frozen=True)
class Standardizer:
    """Per-column location/scale transform fitted on training features.

    Uses the population standard deviation (divide by n). Columns with zero
    variance get scale 1.0, so they map to all zeros instead of dividing
    by zero.
    """

    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(self.means))
        object.__setattr__(self, "scales", _frozen(self.scales))

    @classmethod
    def from_features(cls, X):
        X = np.asarray(X, dtype=np.float64)
        means = X.mean(axis=0)
        scales = X.std(axis=0)
        scales = np.where(scales == 0.0, 1.0, scales)
        return cls(means, scales)

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.means.shape[0]:
            raise DimensionMismatch(
                f"expected {self.means.shape[0]} columns, got shape {X.shape}"
            )
        return (X - self.means) / self.scales


def standardize_fit(dataset):
    """Fit a Standardizer on a Dataset's features."""
    return Standardizer.from_features(dataset.features)


def standardize_apply(standardizer, dataset):
    """Return a Dataset with standardized features and untouched targets."""
    return Dataset(
        standardizer.transform(dataset.features),
        dataset.targets,
        dataset.feature_names,
        dataset.target_name,
    )


def synth_generate(kind, n, m, noise, seed):
    """Generate a synthetic regression Dataset.

    Kinds:
      linear     y = X w + b, X ~ U(-2, 2), w ~ U(-3, 3), b ~ U(12, 18)
      friedman1  X ~ U(0, 1); the classic five-term surface, dropping the
                 terms whose feature columns do not exist when m < 5;
                 columns past the fifth are inert
      piecewise  X ~ U(-1, 1); a sum of step functions on the first three
                 columns (fewer when m < 3), so the surface is axis-aligned
                 and tree-friendly

    Gaussian noise with standard deviation ``noise`` is added to the targets.
    The same (kind, n, m, seed) always draws the same X and the same noise
    vector, so noise=0.0 exposes the exact underlying surface.
    """
    if kind not in SYNTH_KINDS:
        raise UnknownKind(f"kind must be one of {SYNTH_KINDS}, got {kind!r}")
    if n < 4:
        raise TooFewRows(f"need n >= 4, got {n}")
    if m < 1:
        raise EmptyDataset(f"need m >= 1, got {m}")
    if noise < 0.0:
        raise InvalidFraction(f"noise must be non-negative, got {noise}")
    rng = np.random.default_rng(seed)
    if kind == "linear":
        X = rng.uniform(-2.0, 2.0, size=(n, m))
        w = rng.uniform(-3.0, 3.0, size=m)
        # intercept drawn well above zero so targets stay positive like the
        # tabular regression domains this mimics (prices, counts, ratings)
        b = rng.uniform(12.0, 18.0)
        y0 = X @ w + b
    elif kind == "friedman1":
        X = rng.uniform(0.0, 1.0, size=(n, m))
        if m >= 2:
            y0 = 10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
        else:
            y0 = 10.0 * np.sin(np.pi * X[:, 0])
        if m >= 3:
            y0 = y0 + 20.0 * (X[:, 2] - 0.5) ** 2
        if m >= 4:
            y0 = y0 + 10.0 * X[:, 3]
        if m >= 5:
            y0 = y0 + 5.0 * X[:, 4]
    else:
        X = rng.uniform(-1.0, 1.0, size=(n, m))
        steps = ((3.0, 0.0), (2.0, -0.5), (1.0, 0.5))
        y0 = np.zeros(n)
        for j in range(min(m, 3)):
            c, t = steps[j]
            y0 = y0 + c * (X[:, j] > t)
    z = rng.standard_normal(n)
    y = y0 + noise * z
    names = tuple(f"x{j}" for j in range(m))
    return Dataset(X, y, names, "y")
