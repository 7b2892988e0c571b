"""Dataset ingestion, stratified splits, the simulated oracle and evaluation statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm


class DatasetError(ValueError):
    """Raised on malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    name: str
    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: Sequence[int], name: str | None = None) -> "Dataset":
        """Rows ``indices`` as a new dataset; labels keep their global ids."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(name or self.name, self.features[idx], self.labels[idx], self.n_classes)


@dataclass(frozen=True)
class Split:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int


def minmax_normalize(X: np.ndarray) -> np.ndarray:
    """Scale every column to [0, 1]; constant columns become all zeros."""
    X = np.asarray(X, dtype=float)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    out = np.zeros_like(X)
    ok = span > 0
    out[:, ok] = (X[:, ok] - lo[ok]) / span[ok]
    return out


def preprocess(X, y, name: str = "data") -> Dataset:
    """Drop null and duplicate rows, min-max normalize, remap classes to 1..c.

    Duplicates are detected on the feature values only, keeping the first
    occurrence, so that no two pool points sit at distance zero.
    """
    frame = pd.DataFrame(np.asarray(X, dtype=float))
    frame["__y__"] = list(y)
    frame = frame.dropna()
    feature_cols = [c for c in frame.columns if c != "__y__"]
    frame = frame.drop_duplicates(subset=feature_cols, keep="first")
    classes = sorted(pd.unique(frame["__y__"]), key=str)
    if len(classes) < 2:
        raise DatasetError(f"{name}: needs at least two classes, found {len(classes)}")
    remap = {c: i + 1 for i, c in enumerate(classes)}
    labels = frame["__y__"].map(remap).to_numpy(dtype=int)
    features = minmax_normalize(frame[feature_cols].to_numpy(dtype=float))
    return Dataset(name, features, labels, len(classes))


def load_dataset(path, label_column: str, name: str | None = None) -> Dataset:
    """Read a comma-delimited CSV with a header row and preprocess it."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    frame = pd.read_csv(path, encoding="utf-8")
    if label_column not in frame.columns:
        raise DatasetError(f"{path}: no label column {label_column!r}")
    y = frame.pop(label_column)
    # rows with a missing label are dropped like any other null row
    keep = y.notna().to_numpy()
    frame, y = frame[keep], y[keep]
    try:
        X = frame.apply(pd.to_numeric, errors="raise").to_numpy(dtype=float)
    except (ValueError, TypeError) as exc:
        raise DatasetError(f"{path}: non-numeric feature cell ({exc})") from exc
    return preprocess(X, y.to_numpy(), name=name or path.stem)


def stratified_split(d: Dataset, seed: int, train_frac: float = 0.7) -> Split:
    """Per-class shuffled split; each class contributes round(frac * n_c) rows.

    Rounding per class keeps every class within one sample of the global
    fraction. The overall train size can differ from round(frac * n) by a few
    rows when many classes round the same way, so the per-class quotas are
    adjusted (largest remainders first) to hit round(frac * n) exactly.
    """
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie in (0, 1)")
    classes, counts = np.unique(d.labels, return_counts=True)
    if np.any(counts < 2):
        bad = classes[counts < 2].tolist()
        raise DatasetError(f"classes {bad} have fewer than 2 samples")

    target = int(round(train_frac * d.n))
    exact = train_frac * counts
    quota = np.floor(exact).astype(int)
    order = np.lexsort((classes, -(exact - quota)))
    for c in order[: max(0, target - quota.sum())]:
        quota[c] += 1
    quota = np.clip(quota, 1, counts - 1)

    rng = np.random.default_rng(seed)
    train, test = [], []
    for c, q in zip(classes, quota):
        members = np.flatnonzero(d.labels == c)
        members = members[rng.permutation(len(members))]
        train.append(members[:q])
        test.append(members[q:])
    return Split(np.sort(np.concatenate(train)), np.sort(np.concatenate(test)), seed)


@dataclass
class Oracle:
    """Answers label queries and counts the distinct indices asked for."""

    hidden_labels: np.ndarray
    _asked: set = field(default_factory=set, repr=False)

    @property
    def query_count(self) -> int:
        return len(self._asked)

    def query(self, index: int) -> int:
        index = int(index)
        self._asked.add(index)
        return int(self.hidden_labels[index])

    def was_queried(self, index: int) -> bool:
        return int(index) in self._asked


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean per-class recall over the classes present in ``y_true``."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("empty label sequence")
    recalls = [np.mean(y_pred[y_true == c] == c) for c in np.unique(y_true)]
    return float(np.mean(recalls))


def rank_sum_test(a, b) -> float:
    """Two-sided Wilcoxon rank-sum p-value (normal approximation, tie-corrected).

    No continuity correction is applied.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 5 or b.size < 5:
        raise ValueError("rank-sum test needs at least 5 observations per sample")
    n1, n2 = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = pd.Series(pooled).rank(method="average").to_numpy()
    w = ranks[:n1].sum()
    mean = n1 * (n1 + n2 + 1) / 2.0
    _, ties = np.unique(pooled, return_counts=True)
    n = n1 + n2
    tie_term = np.sum(ties**3 - ties) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        # every observation tied: no evidence of a shift
        return 1.0
    z = (w - mean) / math.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(abs(z))))
