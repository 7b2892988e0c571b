"""0-dimensional persistence of upper-star filtrations on graphs.

Time runs from +inf down to -inf: a component is born at the density of its
peak and dies at the level where it merges into an older (higher) component.
Essential components never die; their death is ``-inf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import maximum_bipartite_matching

from .graph import NeighborGraph, component_labels


class TheoremHypothesisError(ValueError):
    """The two graphs do not share the same connected components."""


@dataclass(frozen=True)
class PersistenceDiagram:
    """Off-diagonal points of a 0-dim diagram; ``peaks`` holds each point's birth vertex."""

    births: np.ndarray
    deaths: np.ndarray
    peaks: np.ndarray

    def __len__(self) -> int:
        return self.births.size

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.births.tolist(), self.deaths.tolist()))

    @property
    def essential(self) -> np.ndarray:
        return np.isneginf(self.deaths)

    def finite_part(self) -> np.ndarray:
        keep = ~self.essential
        return np.column_stack([self.births[keep], self.deaths[keep]])

    def prominences(self) -> np.ndarray:
        return self.births - self.deaths

    @classmethod
    def from_points(cls, points) -> "PersistenceDiagram":
        pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
        return cls(pts[:, 0].copy(), pts[:, 1].copy(), np.full(len(pts), -1))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("birth,death\n")
            for b, d in self.points:
                fh.write(f"{b!r},{'inf' if np.isneginf(d) else repr(d)}\n")


def prominence(point) -> float:
    birth, death = point
    return float(birth - death)


def filtration_order(density) -> np.ndarray:
    """Vertices by decreasing density; ties go to the lower index first."""
    f = np.asarray(getattr(density, "normalized", density), dtype=float)
    return np.lexsort((np.arange(f.size), -f))


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n)

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root


def upper_star_diagram(g: NeighborGraph, density) -> PersistenceDiagram:
    f = np.asarray(getattr(density, "normalized", density), dtype=float)
    order = filtration_order(f)
    rank = np.empty(f.size, dtype=int)
    rank[order] = np.arange(f.size)
    uf = _UnionFind(f.size)
    births, deaths, peaks = [], [], []
    for v in order:
        v = int(v)
        roots = {uf.find(int(u)) for u in g.neighbors(v) if rank[u] < rank[v]}
        if not roots:
            continue
        # the component holding the earliest peak survives (elder rule)
        elder = min(roots, key=lambda x: rank[x])
        for root in roots:
            if root != elder:
                if f[root] > f[v]:
                    births.append(f[root])
                    deaths.append(f[v])
                    peaks.append(root)
                uf.parent[root] = elder
        uf.parent[v] = elder
    for v in order:
        if uf.find(int(v)) == v:
            births.append(f[v])
            deaths.append(-np.inf)
            peaks.append(int(v))
    return PersistenceDiagram(np.array(births, float), np.array(deaths, float), np.array(peaks, int))


def _finite_bottleneck(A: np.ndarray, B: np.ndarray) -> float:
    m, k = len(A), len(B)
    if m == 0 and k == 0:
        return 0.0
    size = m + k
    cost = np.zeros((size, size))
    # rows: A points then diagonal slots for B; columns: B points then diagonal slots for A
    half_a = (A[:, 0] - A[:, 1]) / 2.0 if m else np.zeros(0)
    half_b = (B[:, 0] - B[:, 1]) / 2.0 if k else np.zeros(0)
    if m and k:
        cost[:m, :k] = np.maximum(
            np.abs(A[:, None, 0] - B[None, :, 0]), np.abs(A[:, None, 1] - B[None, :, 1])
        )
    cost[:m, k:] = np.inf
    cost[m:, :k] = np.inf
    if m:
        cost[np.arange(m), k + np.arange(m)] = half_a
    if k:
        cost[m + np.arange(k), np.arange(k)] = half_b
    # diagonal-to-diagonal pairs cost nothing
    cost[m:, k:] = 0.0

    candidates = np.unique(cost[np.isfinite(cost)])
    lo, hi = 0, candidates.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching(cost <= candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def _perfect_matching(allowed: np.ndarray) -> bool:
    graph = sparse.csr_matrix(allowed)
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck_distance(A: PersistenceDiagram, B: PersistenceDiagram) -> float:
    """L-infinity bottleneck distance, diagonal projections allowed.

    Essential points are matched among themselves by sorted birth; differing
    essential counts give ``inf``.
    """
    ea = np.sort(A.births[A.essential])
    eb = np.sort(B.births[B.essential])
    if ea.size != eb.size:
        return float("inf")
    essential_cost = float(np.max(np.abs(ea - eb))) if ea.size else 0.0
    return max(essential_cost, _finite_bottleneck(A.finite_part(), B.finite_part()))


def appearance_levels(g: NeighborGraph, density) -> np.ndarray:
    """alpha[i, j]: highest level at which i and j share a component (0 if never)."""
    f = np.asarray(getattr(density, "normalized", density), dtype=float)
    n = f.size
    order = filtration_order(f)
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)
    alpha = np.zeros((n, n))
    uf = _UnionFind(n)
    members: dict[int, list[int]] = {}
    for v in order:
        v = int(v)
        alpha[v, v] = f[v]
        roots = {uf.find(int(u)) for u in g.neighbors(v) if rank[u] < rank[v]}
        group = [v]
        for root in sorted(roots, key=lambda x: rank[x]):
            other = members.pop(root)
            alpha[np.ix_(group, other)] = f[v]
            alpha[np.ix_(other, group)] = f[v]
            group.extend(other)
            uf.parent[root] = v
        members[v] = group
    return alpha


def interleaving_gap(gA: NeighborGraph, gB: NeighborGraph, density) -> float:
    """max |alpha_A - alpha_B| over all pairs; graphs must share their components."""
    if gA.n != gB.n:
        raise ValueError("graphs have different vertex counts")
    _, la = component_labels(gA.adjacency)
    _, lb = component_labels(gB.adjacency)
    if not _same_partition(la, lb):
        raise TheoremHypothesisError("graphs do not share the same connected components")
    return float(np.max(np.abs(appearance_levels(gA, density) - appearance_levels(gB, density))))


def _same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))
