"""Objectives for topological regions and the two-stage search for proper regions.

Stage one searches the sigma-Rips parameters (delta, r, t) maximizing SilSize
of the graph's connected components, raising the size penalty lambda step by
step until the best graph degenerates. Stage two then searches the ToMATo
merging threshold tau on the last non-degenerate graph.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .blackbox import Dim, SearchSpace, TrialLog, optimize
from .graph import (
    Clustering,
    DensityEstimate,
    NeighborGraph,
    SigmaParams,
    build_sigma_rips,
    cluster_roots,
    component_labels,
    is_degenerate_sizes,
    min_component_size,
    sigma_matrix,
)
from .persistence import upper_star_diagram
from .tomato import tomato_cluster

log = logging.getLogger(__name__)

_CHUNK = 1024


def _assignment(c) -> np.ndarray:
    """Cluster ids relabelled to 1..k (order preserved)."""
    raw = np.asarray(getattr(c, "assignment", c))
    return np.unique(raw, return_inverse=True)[1].ravel() + 1


def propagated_labels(regions, density, labels) -> np.ndarray:
    """Every point takes the label of its region's highest-density point."""
    a = _assignment(regions)
    k = int(a.max())
    roots = cluster_roots(a, k, density)
    return np.asarray(labels)[roots][a - 1]


def purity_size(regions, oracle_labels, density) -> float:
    """k / n plus the error rate of propagating each region's peak label."""
    a = _assignment(regions)
    y = np.asarray(oracle_labels)
    k = int(a.max())
    errors = np.count_nonzero(propagated_labels(a, density, y) != y)
    return float((k + errors) / a.size)


def silhouette_values(assignment, D: np.ndarray) -> np.ndarray:
    """Per-point silhouette; points alone in their cluster get 0."""
    a = np.asarray(assignment, dtype=int) - 1
    n = a.size
    k = int(a.max()) + 1
    sizes = np.bincount(a, minlength=k).astype(float)
    out = np.zeros(n)
    if k == 1:
        return out
    onehot = sparse.csr_matrix((np.ones(n), (np.arange(n), a)), shape=(n, k))
    for start in range(0, n, _CHUNK):
        rows = np.arange(start, min(n, start + _CHUNK))
        sums = np.asarray((onehot.T @ D[rows].T).T)
        own = sums[np.arange(rows.size), a[rows]]
        own_size = sizes[a[rows]]
        means = sums / sizes
        means[np.arange(rows.size), a[rows]] = np.inf
        nu_c = means.min(axis=1)
        alone = own_size <= 1
        nu = np.where(alone, 0.0, own / np.maximum(own_size - 1, 1))
        denom = np.maximum(nu, nu_c)
        s = np.where(denom > 0, (nu_c - nu) / np.where(denom > 0, denom, 1.0), 0.0)
        s[alone] = 0.0
        out[rows] = s
    return out


def mean_cluster_silhouette(assignment, D: np.ndarray) -> float:
    """Average over clusters of the mean silhouette inside each cluster (0 when k = 1)."""
    a = np.asarray(assignment, dtype=int)
    k = int(a.max())
    if k == 1:
        return 0.0
    s = silhouette_values(a, D)
    per_cluster = np.bincount(a - 1, weights=s, minlength=k) / np.bincount(a - 1, minlength=k)
    return float(per_cluster.mean())


def sil_size(clustering, D: np.ndarray, lam: float) -> float:
    a = _assignment(clustering)
    return mean_cluster_silhouette(a, D) - lam * int(a.max()) / a.size


def _centroid_stats(clustering, X):
    a = _assignment(clustering)
    X = np.asarray(getattr(X, "features", X), dtype=float)
    ids = np.unique(a)
    if ids.size < 2:
        raise ValueError("validity scores need at least two clusters")
    groups = [X[a == q] for q in ids]
    centroids = np.array([g.mean(axis=0) for g in groups])
    return X, groups, centroids


def validity_score(kind: str, clustering, X) -> float:
    """Calinski-Harabasz, Davies-Bouldin or Dunn (centroid gap over largest diameter)."""
    X, groups, centroids = _centroid_stats(clustering, X)
    n, k = X.shape[0], len(groups)
    if kind == "calinski_harabasz":
        mu = X.mean(axis=0)
        between = sum(len(g) * np.sum((c - mu) ** 2) for g, c in zip(groups, centroids))
        within = sum(np.sum((g - c) ** 2) for g, c in zip(groups, centroids))
        if within == 0:
            return math.inf
        return float((n - k) * between / ((k - 1) * within))
    gaps = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=2)
    if kind == "davies_bouldin":
        if np.any(gaps[~np.eye(k, dtype=bool)] == 0):
            raise ValueError("Davies-Bouldin undefined: two clusters share a centroid")
        spread = np.array([np.linalg.norm(g - c, axis=1).mean() for g, c in zip(groups, centroids)])
        ratio = (spread[:, None] + spread[None, :]) / np.where(gaps > 0, gaps, np.inf)
        np.fill_diagonal(ratio, -np.inf)
        return float(ratio.max(axis=1).mean())
    if kind == "dunn":
        diam = max(
            float(np.max(np.linalg.norm(g[:, None] - g[None, :], axis=2))) if len(g) > 1 else 0.0
            for g in groups
        )
        if diam == 0:
            raise ValueError("Dunn index undefined: every cluster has zero diameter")
        return float(gaps[~np.eye(k, dtype=bool)].min() / diam)
    raise ValueError(f"unknown validity score {kind!r}")


@dataclass(frozen=True)
class PTRConfig:
    lambda_step: float = 0.01
    trials: int = 500
    seed: int = 0
    method: str = "tpe"
    # safety cap on the lambda line search; see README
    max_lambda_steps: int = 100
    delta_low_frac: float = 1e-3
    r_bounds: tuple[float, float] = (1.0 + 1e-6, 2.0)
    t_bounds: tuple[float, float] = (0.05, 1.0)
    tau_bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not self.lambda_step > 0:
            raise ValueError("lambda_step must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_lambda_steps < 1:
            raise ValueError("max_lambda_steps must be >= 1")

    def graph_space(self, d_max: float) -> SearchSpace:
        return SearchSpace.of(
            Dim("delta", self.delta_low_frac * d_max, d_max, "log"),
            Dim("r", *self.r_bounds),
            Dim("t", *self.t_bounds),
        )

    def tau_space(self) -> SearchSpace:
        return SearchSpace.of(Dim("tau", *self.tau_bounds))


@dataclass
class PTRModel:
    params: SigmaParams
    tau: float
    regions: Clustering
    density: DensityEstimate
    graph: NeighborGraph
    lambda_final: float
    stage1_value: float = math.nan
    stage2_value: float = math.nan
    lambda_steps: int = 0
    degenerate_at_first: bool = False
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "delta": self.params.delta,
            "r": self.params.r,
            "t": self.params.t,
            "tau": self.tau,
            "lambda_final": self.lambda_final,
            "lambda_steps": self.lambda_steps,
            "k": self.regions.k,
            "stage1_value": self.stage1_value,
            "stage2_value": self.stage2_value,
            "assignment": self.regions.assignment.tolist(),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


class GraphObjective:
    """Memoized SilSize of sigma-Rips components, reusable across lambda values."""

    def __init__(self, D: np.ndarray, density: DensityEstimate):
        self.D = D
        self.f = density.normalized
        self.n = D.shape[0]
        self.lam = 0.0
        self._cache: dict[tuple, tuple[float, int, np.ndarray]] = {}

    def components(self, p: SigmaParams) -> np.ndarray:
        mask = self.D <= sigma_matrix(self.f, p)
        _, labels = component_labels(sparse.csr_matrix(mask))
        return labels

    def stats(self, p: SigmaParams) -> tuple[float, int, np.ndarray]:
        key = (p.delta, p.r, p.t)
        hit = self._cache.get(key)
        if hit is None:
            labels = self.components(p)
            sizes = np.bincount(labels)
            sil = mean_cluster_silhouette(labels + 1, self.D) if sizes.size > 1 else 0.0
            hit = (sil, int(sizes.size), sizes)
            self._cache[key] = hit
        return hit

    def value(self, p: SigmaParams, lam: float) -> float:
        sil, k, _ = self.stats(p)
        return sil - lam * k / self.n

    def __call__(self, params: dict) -> float:
        return self.value(SigmaParams(params["delta"], params["r"], params["t"]), self.lam)


def _sigma(params: dict) -> SigmaParams:
    return SigmaParams(params["delta"], params["r"], params["t"])


def optimize_ptr(D: np.ndarray, density: DensityEstimate, cfg: PTRConfig = PTRConfig()) -> PTRModel:
    """Estimate proper topological regions on the pool with distances ``D``."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    objective = GraphObjective(D, density)
    space = cfg.graph_space(float(D.max()))
    history = []

    def stage1(step: int) -> tuple[dict, float, bool]:
        objective.lam = step * cfg.lambda_step
        trials = optimize(objective, space, cfg.trials, cfg.method, cfg.seed)
        best = trials.best()
        _, _, sizes = objective.stats(_sigma(best.params))
        degenerate = is_degenerate_sizes(sizes, n)
        history.append(
            {
                "lambda": objective.lam,
                "value": best.value,
                "k": int(sizes.size),
                "degenerate": degenerate,
                "fragmented": bool(sizes.min() < min_component_size(n)),
            }
        )
        log.debug("lambda=%.4f best=%.5f k=%d degenerate=%s", objective.lam, best.value, sizes.size, degenerate)
        return best.params, best.value, degenerate

    step = 1
    params, value, degenerate = stage1(step)
    # low lambda favours shattered graphs; climb until no tiny component remains
    while degenerate and history[-1]["fragmented"] and step < cfg.max_lambda_steps:
        step += 1
        params, value, degenerate = stage1(step)
    kept = (step, params, value)
    degenerate_at_first = degenerate
    if degenerate:
        warnings.warn(
            f"sigma-Rips graph still degenerate at lambda={step * cfg.lambda_step:g}; keeping it",
            RuntimeWarning,
            stacklevel=2,
        )
    while not degenerate and step < cfg.max_lambda_steps:
        kept = (step, params, value)
        step += 1
        params, value, degenerate = stage1(step)
    if not degenerate:
        kept = (step, params, value)
    step, params, value = kept
    lam = step * cfg.lambda_step

    sigma = _sigma(params)
    graph = build_sigma_rips(D, density, sigma)
    tau, regions, stage2_value = _stage2(graph, density, D, lam, cfg)
    return PTRModel(
        params=sigma,
        tau=tau,
        regions=regions,
        density=density,
        graph=graph,
        lambda_final=lam,
        stage1_value=value,
        stage2_value=stage2_value,
        lambda_steps=len(history),
        degenerate_at_first=degenerate_at_first,
        history=history,
    )


def _stage2(graph: NeighborGraph, density: DensityEstimate, D: np.ndarray, lam: float, cfg: PTRConfig):
    """Search tau; ToMATo only changes output when tau crosses a finite prominence."""
    f = density.normalized
    diagram = upper_star_diagram(graph, f)
    prominences = np.unique(diagram.prominences()[~diagram.essential])
    cache: dict[int, tuple[Clustering, float]] = {}

    def evaluate(tau: float) -> tuple[Clustering, float]:
        bucket = int(np.searchsorted(prominences, tau, side="left"))
        if bucket not in cache:
            clustering = tomato_cluster(graph, f, tau, with_diagram=False).clustering
            cache[bucket] = (clustering, sil_size(clustering, D, lam))
        return cache[bucket]

    trials = optimize(lambda p: evaluate(p["tau"])[1], cfg.tau_space(), cfg.trials, cfg.method, cfg.seed)
    best = trials.best()
    clustering, value = evaluate(best.params["tau"])
    return float(best.params["tau"]), clustering, value


def graph_purity_search(
    D: np.ndarray,
    density: DensityEstimate,
    labels,
    kind: str,
    trials: int,
    seed: int = 0,
    method: str = "tpe",
    cfg: PTRConfig = PTRConfig(),
) -> tuple[float, dict, TrialLog]:
    """Minimize PuritySize of graph components over a Rips or sigma-Rips family.

    Returns the best PuritySize, its parameters and the full trial log (values
    are negated PuritySize since the optimizer maximizes).
    """
    D = np.asarray(D, dtype=float)
    y = np.asarray(labels)
    f = density.normalized
    d_max = float(D.max())
    if kind == "rips":
        space = SearchSpace.of(Dim("delta", cfg.delta_low_frac * d_max, d_max, "log"))
    elif kind == "sigma":
        space = cfg.graph_space(d_max)
    else:
        raise ValueError(f"unknown graph kind {kind!r}")

    def objective(params: dict) -> float:
        if kind == "rips":
            mask = D <= params["delta"]
        else:
            mask = D <= sigma_matrix(f, _sigma(params))
        _, comp = component_labels(sparse.csr_matrix(mask))
        return -purity_size(comp + 1, y, f)

    trials_log = optimize(objective, space, trials, method, seed)
    best = trials_log.best()
    return -best.value, dict(best.params), trials_log


def threshold_curve(params: dict, grid=None) -> tuple[np.ndarray, np.ndarray]:
    """Threshold as a function of normalized density (constant for Rips)."""
    grid = np.linspace(0.0, 1.0, 101) if grid is None else np.asarray(grid, dtype=float)
    if set(params) == {"delta"}:
        return grid, np.full(grid.shape, params["delta"])
    return grid, _sigma(params).delta * (params["r"] - grid) ** (1.0 / params["t"])
