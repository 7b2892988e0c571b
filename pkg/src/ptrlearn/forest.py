"""Random forest of Gini decision trees, written against plain numpy.

Defaults: 100 trees, bootstrap resamples of full size, ceil(sqrt(m)) candidate
features per split, trees grown until leaves are pure or hold fewer than two
samples. Thresholds are midpoints between consecutive distinct values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

N_TREES = 100


@dataclass(frozen=True)
class DecisionTree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) training histogram per node

    def leaves(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        c = self.counts[self.leaves(X)]
        return c / c.sum(axis=1, keepdims=True)


def _best_split(X, y, idx, features, n_classes):
    """Lowest weighted Gini split over ``features``; None if no feature varies."""
    best = None
    yi = y[idx]
    total = idx.size
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        valid = np.flatnonzero(xs[:-1] < xs[1:])
        if valid.size == 0:
            continue
        onehot = np.zeros((total, n_classes))
        onehot[np.arange(total), yi[order]] = 1.0
        left = np.cumsum(onehot, axis=0)[valid]
        right = onehot.sum(axis=0) - left
        n_left = (valid + 1).astype(float)
        n_right = total - n_left
        # n * gini = n - sum(counts^2) / n
        score = (n_left - (left**2).sum(axis=1) / n_left) + (n_right - (right**2).sum(axis=1) / n_right)
        i = int(np.argmin(score))
        if best is None or score[i] < best[0]:
            lo, hi = xs[valid[i]], xs[valid[i] + 1]
            mid = 0.5 * (lo + hi)
            best = (score[i], f, mid if mid < hi else lo)
    return best


def grow_tree(X: np.ndarray, y: np.ndarray, idx: np.ndarray, n_classes: int, max_features: int, rng) -> DecisionTree:
    """Grow one tree on rows ``idx`` (duplicates allowed); ``y`` holds class positions."""
    m = X.shape[1]
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[rows], minlength=n_classes))
        return len(feature) - 1

    stack = [(new_node(idx), idx)]
    while stack:
        node, rows = stack.pop()
        if rows.size < 2 or np.count_nonzero(counts[node]) <= 1:
            continue
        order = rng.permutation(m)
        split = _best_split(X, y, rows, order[:max_features], n_classes)
        if split is None and max_features < m:
            # keep looking past the sampled features until some feature varies
            split = _best_split(X, y, rows, order[max_features:], n_classes)
        if split is None:
            continue
        _, f, thr = split
        mask = X[rows, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = new_node(rows[mask])
        right[node] = new_node(rows[~mask])
        stack.append((right[node], rows[~mask]))
        stack.append((left[node], rows[mask]))
    return DecisionTree(
        np.array(feature), np.array(threshold, float), np.array(left), np.array(right), np.array(counts)
    )


@dataclass(frozen=True)
class ClassifierModel:
    trees: tuple[DecisionTree, ...]
    class_ids: np.ndarray
    n_features: int
    max_features: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self, X)

    def predict(self, X) -> np.ndarray:
        return self.class_ids[np.argmax(self.predict_proba(X), axis=1)]


def fit(X, y, seed: int = 0, n_trees: int = N_TREES) -> ClassifierModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise ValueError("need a nonempty training set with one label per row")
    class_ids, y_pos = np.unique(y, return_inverse=True)
    y_pos = y_pos.ravel()
    n, m = X.shape
    max_features = max(1, math.ceil(math.sqrt(m)))
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X, y_pos, boot, class_ids.size, max_features, rng))
    return ClassifierModel(tuple(trees), class_ids, m, max_features)


def predict_proba(model: ClassifierModel, X) -> np.ndarray:
    """Mean of the trees' normalized leaf histograms."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} columns, got shape {X.shape}")
    proba = np.zeros((X.shape[0], model.class_ids.size))
    for tree in model.trees:
        proba += tree.predict_proba(X)
    return proba / model.n_trees
