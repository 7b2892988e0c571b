"""Distances, distance-to-measure density, Rips and sigma-Rips neighborhood graphs."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components as _cc
from scipy.spatial.distance import cdist

# raw density assigned to a point whose ell nearest neighbors all coincide with it
DENSITY_CAP = 1e12


@dataclass(frozen=True)
class DensityEstimate:
    values: np.ndarray
    normalized: np.ndarray
    ell: int


@dataclass(frozen=True)
class SigmaParams:
    delta: float
    r: float
    t: float

    def check(self, max_density: float = 1.0) -> None:
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0 < self.t <= 1:
            raise ValueError(f"t must lie in (0, 1], got {self.t}")
        if not self.r > max_density:
            raise ValueError(f"r={self.r} must exceed the max density {max_density}")


@dataclass(frozen=True)
class Rips:
    delta: float


GraphKind = Union[Rips, SigmaParams]


@dataclass(frozen=True)
class NeighborGraph:
    """Undirected simple graph stored as a symmetric boolean CSR matrix."""

    adjacency: sparse.csr_matrix
    kind: GraphKind | None = None

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    def edges(self) -> list[tuple[int, int]]:
        upper = sparse.triu(self.adjacency, k=1).tocoo()
        return sorted(zip(upper.row.tolist(), upper.col.tolist()))

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    @classmethod
    def from_mask(cls, mask: np.ndarray, kind: GraphKind | None = None) -> "NeighborGraph":
        mask = np.array(mask, dtype=bool)
        np.fill_diagonal(mask, False)
        adj = sparse.csr_matrix(mask | mask.T)
        adj.sort_indices()
        return cls(adj, kind)

    @classmethod
    def from_edges(cls, n: int, edges, kind: GraphKind | None = None) -> "NeighborGraph":
        mask = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            mask[i, j] = mask[j, i] = True
        return cls.from_mask(mask, kind)


def pairwise_distances(X) -> np.ndarray:
    """Euclidean distance matrix with an exact zero diagonal."""
    X = np.asarray(getattr(X, "features", X), dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least two points")
    D = cdist(X, X)
    np.fill_diagonal(D, 0.0)
    return D


def default_ell(n: int) -> int:
    return min(n - 1, 2000)


def estimate_density(D: np.ndarray, ell: int | None = None) -> DensityEstimate:
    """Inverse root-mean-square distance to the ``ell`` nearest other points.

    The query point itself is excluded from its neighbors. ``normalized`` is
    the min-max rescaling of the raw values to [0, 1] (all zeros when the raw
    values are constant).
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    ell = default_ell(n) if ell is None else int(ell)
    if not 1 <= ell <= n - 1:
        raise ValueError(f"ell must lie in [1, {n - 1}], got {ell}")
    sq = D**2
    np.fill_diagonal(sq, np.inf)
    if ell < n - 1:
        nearest = np.partition(sq, ell - 1, axis=1)[:, :ell]
    else:
        nearest = np.where(np.isinf(sq), 0.0, sq)
    msd = nearest.sum(axis=1) / ell
    raw = np.empty(n)
    zero = msd <= 0
    if zero.any():
        warnings.warn(
            f"{int(zero.sum())} point(s) have {ell} duplicate neighbors; density capped",
            RuntimeWarning,
            stacklevel=2,
        )
    raw[zero] = DENSITY_CAP
    raw[~zero] = msd[~zero] ** -0.5
    lo, hi = raw.min(), raw.max()
    normalized = (raw - lo) / (hi - lo) if hi > lo else np.zeros(n)
    return DensityEstimate(raw, normalized, ell)


def sigma_threshold(p: SigmaParams, pi, pj):
    """delta * (r - max(pi, pj)) ** (1 / t); works elementwise on arrays."""
    top = np.maximum(pi, pj)
    if np.any(top >= p.r):
        raise ValueError(f"r={p.r} must exceed every density value (got {np.max(top)})")
    out = p.delta * (p.r - top) ** (1.0 / p.t)
    return float(out) if np.ndim(out) == 0 else out


def sigma_matrix(dens: DensityEstimate | np.ndarray, p: SigmaParams) -> np.ndarray:
    f = np.asarray(getattr(dens, "normalized", dens), dtype=float)
    return sigma_threshold(p, f[:, None], f[None, :])


def build_rips(D: np.ndarray, delta: float) -> NeighborGraph:
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return NeighborGraph.from_mask(np.asarray(D) <= delta, Rips(float(delta)))


def build_sigma_rips(D: np.ndarray, dens: DensityEstimate, p: SigmaParams) -> NeighborGraph:
    p.check(float(np.max(dens.normalized)))
    return NeighborGraph.from_mask(np.asarray(D) <= sigma_matrix(dens, p), p)


def dhat_distance(D: np.ndarray, dens: DensityEstimate, p: SigmaParams) -> np.ndarray:
    """delta * d / sigma: a delta-Rips graph on it equals the sigma-Rips graph on ``D``."""
    p.check(float(np.max(dens.normalized)))
    out = p.delta * np.asarray(D, dtype=float) / sigma_matrix(dens, p)
    np.fill_diagonal(out, 0.0)
    return out


@dataclass(frozen=True)
class Clustering:
    """Assignment of ``n`` points to clusters labelled 1..k.

    ``roots[q - 1]`` is the index of the highest-density point of cluster q
    when a density was available, otherwise its lowest index.
    """

    assignment: np.ndarray
    k: int
    roots: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k + 1)[1:]

    def members(self, q: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == q)


def clustering_from_labels(labels, density=None) -> Clustering:
    """Relabel arbitrary integer labels to 1..k in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    assignment = rank[inverse.ravel()] + 1
    k = int(order.size)
    return Clustering(assignment, k, cluster_roots(assignment, k, density))


def cluster_roots(assignment: np.ndarray, k: int, density=None) -> np.ndarray:
    """Per-cluster peak index: max density, ties to the lowest index."""
    n = assignment.size
    if density is None:
        key = np.zeros(n)
    else:
        key = np.asarray(getattr(density, "normalized", density), dtype=float)
    # lexsort: last key is primary -> cluster, then density descending, then index
    order = np.lexsort((np.arange(n), -key, assignment))
    starts = np.searchsorted(assignment[order], np.arange(1, k + 1))
    return order[starts]


def component_labels(adjacency) -> tuple[int, np.ndarray]:
    return _cc(adjacency, directed=False)


def connected_components(g: NeighborGraph, density=None) -> Clustering:
    _, labels = component_labels(g.adjacency)
    return clustering_from_labels(labels, density)


def min_component_size(n: int) -> int:
    return max(3, math.ceil(0.01 * n))


def is_degenerate_sizes(sizes, n: int) -> bool:
    sizes = np.asarray(sizes)
    if n >= 10 and sizes.max() >= 0.99 * n:
        return True
    return bool(sizes.min() < min_component_size(n))


def is_degenerate(g: NeighborGraph) -> bool:
    """Giant component (>= 99% of n, n >= 10) or any component below max(3, ceil(n/100))."""
    _, labels = component_labels(g.adjacency)
    return is_degenerate_sizes(np.bincount(labels), g.n)


def dump_edge_list(g: NeighborGraph, D: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in g.edges():
            fh.write(f"{i} {j} {float(D[i, j])!r}\n")
