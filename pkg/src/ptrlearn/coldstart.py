"""Cold-start baselines: pick B pool points to label before any model exists."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import AffinityPropagation, AgglomerativeClustering, KMeans
from sklearn.exceptions import ConvergenceWarning

from .active import ORACLE, LabeledPool
from .data import Oracle

METHODS = ("rs", "km", "km_me", "kmedoids", "ahc", "fft", "apc")


def _nearest_distinct(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """For each center in turn, the closest pool point not already taken."""
    dist = cdist(centers, X)
    taken = np.zeros(X.shape[0], dtype=bool)
    out = []
    for row in dist:
        row = np.where(taken, np.inf, row)
        i = int(np.argmin(row))
        taken[i] = True
        out.append(i)
    return np.array(out, dtype=int)


def farthest_first(X: np.ndarray, B: int, start: int | None = None) -> np.ndarray:
    """Greedy k-center traversal; starts at the point nearest the centroid by default."""
    X = np.asarray(X, dtype=float)
    if start is None:
        start = int(np.argmin(np.linalg.norm(X - X.mean(axis=0), axis=1)))
    chosen = [start]
    gap = np.linalg.norm(X - X[start], axis=1)
    for _ in range(B - 1):
        nxt = int(np.argmax(gap))
        chosen.append(nxt)
        gap = np.minimum(gap, np.linalg.norm(X - X[nxt], axis=1))
    return np.array(chosen, dtype=int)


def pam(D: np.ndarray, k: int, max_iter: int = 100) -> np.ndarray:
    """k-medoids by BUILD then best-improvement SWAP on a distance matrix."""
    n = D.shape[0]
    medoids = [int(np.argmin(D.sum(axis=1)))]
    nearest = D[medoids[0]].copy()
    for _ in range(k - 1):
        gain = np.maximum(nearest[None, :] - D, 0.0).sum(axis=1)
        gain[medoids] = -np.inf
        m = int(np.argmax(gain))
        medoids.append(m)
        nearest = np.minimum(nearest, D[m])
    medoids = np.array(medoids)
    for _ in range(max_iter):
        Dm = D[medoids]
        order = np.argsort(Dm, axis=0, kind="stable")
        first = Dm[order[0], np.arange(n)]
        second = Dm[order[1], np.arange(n)] if k > 1 else np.full(n, np.inf)
        cost = first.sum()
        best = (0.0, -1, -1)
        is_medoid = np.zeros(n, dtype=bool)
        is_medoid[medoids] = True
        for slot in range(k):
            # removing this medoid sends its points to their second choice
            base = np.where(order[0] == slot, second, first)
            totals = np.minimum(base[None, :], D).sum(axis=1) - cost
            totals[is_medoid] = np.inf
            h = int(np.argmin(totals))
            if totals[h] < best[0] - 1e-12:
                best = (totals[h], slot, h)
        if best[1] < 0:
            break
        medoids[best[1]] = best[2]
    return np.sort(medoids)


def _apc_exemplars(X: np.ndarray, B: int, seed: int, steps: int = 12) -> np.ndarray:
    S = -cdist(X, X, "sqeuclidean")
    off = S[~np.eye(len(S), dtype=bool)]

    def run(pref):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            # heavy damping: the default 0.5 oscillates on symmetric data
            ap = AffinityPropagation(
                affinity="precomputed", preference=pref, damping=0.9, max_iter=1000, random_state=seed
            ).fit(S)
        centers = np.asarray(ap.cluster_centers_indices_, dtype=int)
        return centers, ap.labels_

    lo, hi = float(off.min()), float(off.max())
    best = run(hi)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        centers, labels = run(mid)
        if centers.size >= B:
            hi, best = mid, (centers, labels)
        else:
            lo = mid
    centers, labels = best
    if centers.size < B:
        raise RuntimeError(f"affinity propagation found {centers.size} exemplars for a budget of {B}")
    sizes = np.bincount(labels[labels >= 0], minlength=centers.size)
    keep = sorted(range(centers.size), key=lambda c: (-sizes[c], centers[c]))[:B]
    return centers[keep]


def coldstart_init(method: str, X, B: int, oracle: Oracle, seed: int = 0) -> LabeledPool:
    """Label ``B`` pool points chosen by ``method``; exactly ``B`` oracle queries."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if method not in METHODS:
        raise ValueError(f"unknown cold-start method {method!r}")
    if not 1 <= B <= n:
        raise ValueError(f"budget {B} outside [1, {n}]")
    centers = None
    if method == "rs":
        picked = np.random.default_rng(seed).choice(n, size=B, replace=False)
    elif method in ("km", "km_me"):
        km = KMeans(n_clusters=B, init="k-means++", n_init=1, max_iter=100, random_state=seed).fit(X)
        centers = km.cluster_centers_
        picked = _nearest_distinct(X, centers)
    elif method == "kmedoids":
        picked = pam(cdist(X, X), B)
    elif method == "ahc":
        labels = AgglomerativeClustering(n_clusters=B, linkage="ward").fit_predict(X)
        means = np.array([X[labels == c].mean(axis=0) for c in range(B)])
        picked = _nearest_distinct(X, means)
    elif method == "fft":
        picked = farthest_first(X, B)
    else:
        picked = _apc_exemplars(X, B, seed)
    pool = LabeledPool()
    for i in picked:
        pool.add(int(i), oracle.query(int(i)), ORACLE)
    if method == "km_me":
        pool.synthetic.extend((c.copy(), pool.entries[int(i)][0]) for c, i in zip(centers, picked))
    return pool
