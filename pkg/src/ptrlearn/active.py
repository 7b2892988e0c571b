"""Label propagation over regions, zero-shot initialization and the meta active-learning loop."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import forest
from .data import Oracle
from .graph import Clustering, cluster_roots

ORACLE = "oracle"
PROPAGATED = "propagated"
STRATEGIES = ("uncertainty", "margin", "entropy")


@dataclass
class LabeledPool:
    """index -> (label, provenance), plus optional synthetic rows (features, label)."""

    entries: dict = field(default_factory=dict)
    synthetic: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, index) -> bool:
        return int(index) in self.entries

    def add(self, index: int, label: int, provenance: str) -> None:
        index = int(index)
        # an oracle answer is never overwritten by a propagated guess
        if provenance == PROPAGATED and self.entries.get(index, (None, None))[1] == ORACLE:
            return
        self.entries[index] = (int(label), provenance)

    def update(self, other: "LabeledPool") -> None:
        for i, (label, prov) in other.entries.items():
            self.add(i, label, prov)
        self.synthetic.extend(other.synthetic)

    def copy(self) -> "LabeledPool":
        return LabeledPool(dict(self.entries), list(self.synthetic))

    @property
    def indices(self) -> np.ndarray:
        return np.array(sorted(self.entries), dtype=int)

    def count(self, provenance: str) -> int:
        return sum(1 for _, p in self.entries.values() if p == provenance)

    def training_set(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = self.indices
        feats = [X[idx]]
        labels = [np.array([self.entries[i][0] for i in idx], dtype=int)]
        if self.synthetic:
            feats.append(np.array([row for row, _ in self.synthetic], dtype=float))
            labels.append(np.array([lab for _, lab in self.synthetic], dtype=int))
        return np.concatenate(feats), np.concatenate(labels)


def _density(density) -> np.ndarray:
    return np.asarray(getattr(density, "normalized", density), dtype=float)


def propagate_labels(regions: Clustering, density, region_ids: Iterable[int], oracle: Oracle) -> LabeledPool:
    """Query each region's density peak and copy its label to the whole region."""
    roots = cluster_roots(regions.assignment, regions.k, _density(density))
    delta = LabeledPool()
    for q in region_ids:
        peak = int(roots[q - 1])
        label = oracle.query(peak)
        for i in regions.members(q):
            delta.add(i, label, ORACLE if i == peak else PROPAGATED)
    return delta


def largest_regions(regions: Clustering, count: int, exclude: Iterable[int] = ()) -> list[int]:
    """Region ids by decreasing size, ties to the lower id, skipping ``exclude``."""
    skip = set(exclude)
    sizes = regions.sizes
    order = sorted(range(1, regions.k + 1), key=lambda q: (-sizes[q - 1], q))
    return [q for q in order if q not in skip][:count]


def zero_shot(regions: Clustering, density, oracle: Oracle, budget: int) -> LabeledPool:
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if regions.k < budget:
        warnings.warn(f"only {regions.k} regions for a budget of {budget}", RuntimeWarning, stacklevel=2)
    pool = LabeledPool()
    pool.update(propagate_labels(regions, density, largest_regions(regions, budget), oracle))
    return pool


def query_scores(kind: str, proba) -> np.ndarray:
    """Informativeness of each row of ``proba``; higher means query first."""
    p = np.asarray(proba, dtype=float)
    if kind == "uncertainty":
        return 1.0 - p.max(axis=1)
    if kind == "margin":
        top = -np.sort(-p, axis=1)
        second = top[:, 1] if p.shape[1] > 1 else np.zeros(p.shape[0])
        return -(top[:, 0] - second)
    if kind == "entropy":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p > 0, p * np.log(p), 0.0)
        return -terms.sum(axis=1)
    raise ValueError(f"unknown strategy {kind!r}")


def select_queries(scores: np.ndarray, labeled, count: int) -> np.ndarray:
    """Top-``count`` unlabeled indices by score; ties go to the lower index."""
    scores = np.array(scores, dtype=float)
    scores[np.asarray(list(labeled), dtype=int)] = -np.inf
    order = np.argsort(-scores, kind="stable")
    order = order[np.isfinite(scores[order])]
    return order[:count]


Learner = Callable[..., object]


@dataclass(frozen=True)
class ALConfig:
    budget: int
    rounds: int = 10
    strategy: str = "uncertainty"
    seed: int = 0
    n_trees: int = forest.N_TREES

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass
class RoundState:
    round: int
    queries: int
    n_oracle: int
    n_propagated: int
    n_synthetic: int
    model: object


@dataclass
class ALRun:
    pool: LabeledPool
    rounds: list[RoundState]
    stopped_early: bool = False

    @property
    def rounds_completed(self) -> int:
        return len(self.rounds) - 1


def _fit(pool: LabeledPool, X: np.ndarray, cfg: ALConfig, learner: Learner):
    Xt, yt = pool.training_set(X)
    return learner(Xt, yt, seed=cfg.seed, n_trees=cfg.n_trees)


def _state(u: int, pool: LabeledPool, oracle: Oracle, model) -> RoundState:
    return RoundState(u, oracle.query_count, pool.count(ORACLE), pool.count(PROPAGATED), len(pool.synthetic), model)


def pal_ptr(
    X: np.ndarray,
    regions: Clustering,
    density,
    oracle: Oracle,
    cfg: ALConfig,
    learner: Learner = forest.fit,
) -> ALRun:
    """Zero-shot start, then per round map the strategy's picks to whole regions."""
    X = np.asarray(X, dtype=float)
    pool = zero_shot(regions, density, oracle, cfg.budget)
    states = [_state(0, pool, oracle, _fit(pool, X, cfg, learner))]
    stopped = False
    for u in range(cfg.rounds):
        model = states[-1].model
        unlabeled = {q for q in range(1, regions.k + 1) if int(regions.roots[q - 1]) not in pool}
        unlabeled = {q for q in unlabeled if not any(i in pool for i in regions.members(q))}
        if not unlabeled:
            stopped = True
            break
        scores = query_scores(cfg.strategy, model.predict_proba(X))
        picked = select_queries(scores, pool.entries.keys(), cfg.budget)
        hit = sorted({int(regions.assignment[i]) for i in picked} & unlabeled)
        chosen = list(hit)
        if len(chosen) < cfg.budget:
            chosen += largest_regions(regions, cfg.budget - len(chosen), exclude=set(hit) | (set(range(1, regions.k + 1)) - unlabeled))
        pool.update(propagate_labels(regions, density, chosen, oracle))
        states.append(_state(u + 1, pool, oracle, _fit(pool, X, cfg, learner)))
    return ALRun(pool, states, stopped)


def pool_based_al(
    X: np.ndarray,
    initial: LabeledPool,
    oracle: Oracle,
    cfg: ALConfig,
    learner: Learner = forest.fit,
) -> ALRun:
    """Plain pool-based loop: each round queries the ``budget`` top-scored points."""
    X = np.asarray(X, dtype=float)
    pool = initial.copy()
    states = [_state(0, pool, oracle, _fit(pool, X, cfg, learner))]
    stopped = False
    for u in range(cfg.rounds):
        if len(pool) >= X.shape[0]:
            stopped = True
            break
        scores = query_scores(cfg.strategy, states[-1].model.predict_proba(X))
        for i in select_queries(scores, pool.entries.keys(), cfg.budget):
            pool.add(i, oracle.query(i), ORACLE)
        states.append(_state(u + 1, pool, oracle, _fit(pool, X, cfg, learner)))
    return ALRun(pool, states, stopped)
