"""ToMATo clustering: density hill-climbing on a graph with prominence merging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Clustering, NeighborGraph
from .persistence import PersistenceDiagram, _UnionFind, filtration_order, upper_star_diagram


@dataclass(frozen=True)
class TomatoResult:
    clustering: Clustering
    diagram: PersistenceDiagram
    tau: float


def tomato_cluster(g: NeighborGraph, density, tau: float, with_diagram: bool = True) -> TomatoResult:
    """Cluster ``g`` by hill climbing on ``density``, merging peaks of prominence < ``tau``.

    Each vertex, visited in decreasing density, joins the cluster of its
    highest earlier neighbor. Whenever it touches another cluster whose lower
    peak rises less than ``tau`` above the vertex's level, the lower cluster
    is merged into the higher one. Clusters are numbered 1..k by decreasing
    peak density.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    f = np.asarray(getattr(density, "normalized", density), dtype=float)
    n = f.size
    if g.n != n:
        raise ValueError("graph and density sizes differ")
    order = filtration_order(f)
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)
    uf = _UnionFind(n)
    for v in order:
        v = int(v)
        earlier = [int(u) for u in g.neighbors(v) if rank[u] < rank[v]]
        if not earlier:
            continue
        top = min(earlier, key=lambda u: rank[u])
        ri = uf.find(top)
        uf.parent[v] = ri
        for u in earlier:
            e = uf.find(u)
            if e == ri:
                continue
            lower, higher = (e, ri) if rank[e] > rank[ri] else (ri, e)
            # zero-prominence peaks (ties at the merge level) never survive
            if f[lower] - f[v] < tau or f[lower] == f[v]:
                uf.parent[lower] = higher
                ri = higher
    root_of = np.array([uf.find(i) for i in range(n)])
    peaks = np.unique(root_of)
    peaks = peaks[np.argsort(rank[peaks])]
    cluster_id = np.empty(n, dtype=int)
    cluster_id[peaks] = np.arange(1, peaks.size + 1)
    clustering = Clustering(cluster_id[root_of], int(peaks.size), peaks)
    diagram = upper_star_diagram(g, f) if with_diagram else None
    return TomatoResult(clustering, diagram, float(tau))
