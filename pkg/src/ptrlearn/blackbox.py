"""Black-box maximization over small boxes: random search and a Tree-structured Parzen Estimator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

GAMMA = 0.25
N_STARTUP = 20
N_CANDIDATES = 24
_SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class Dim:
    name: str
    lower: float
    upper: float
    scale: str = "linear"

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower must be < upper")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"{self.name}: unknown scale {self.scale!r}")
        if self.scale == "log" and self.lower <= 0:
            raise ValueError(f"{self.name}: log scale needs a positive lower bound")

    # internal coordinates are the raw value, or its log for log-scaled dims
    @property
    def bounds(self) -> tuple[float, float]:
        if self.scale == "log":
            return math.log(self.lower), math.log(self.upper)
        return self.lower, self.upper

    def to_value(self, z: float) -> float:
        v = math.exp(z) if self.scale == "log" else z
        return min(max(v, self.lower), self.upper)

    def to_internal(self, v: float) -> float:
        return math.log(v) if self.scale == "log" else v


@dataclass(frozen=True)
class SearchSpace:
    dims: tuple[Dim, ...]

    @classmethod
    def of(cls, *dims: Dim) -> "SearchSpace":
        return cls(tuple(dims))

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    def contains(self, point: Mapping[str, float]) -> bool:
        return all(d.lower <= point[d.name] <= d.upper for d in self.dims)


@dataclass(frozen=True)
class Trial:
    index: int
    params: dict
    value: float


@dataclass
class TrialLog:
    entries: list[Trial] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def best(self) -> Trial:
        if not self.entries:
            raise ValueError("empty trial log")
        # max() keeps the first maximal element, i.e. the lowest index on ties
        return max(self.entries, key=lambda t: t.value)

    def to_csv(self, path, names: Sequence[str]) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["trial_index", *names, "value"])
            for t in self.entries:
                w.writerow([t.index, *(repr(t.params[k]) for k in names), repr(t.value)])


Objective = Callable[[dict], float]


def _finite(value) -> float:
    value = float(value)
    return value if math.isfinite(value) else -math.inf


def _uniform(space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    return np.array([rng.uniform(*d.bounds) for d in space.dims])


class _Parzen:
    """One-dimensional truncated Gaussian mixture with a flat prior component."""

    def __init__(self, obs: np.ndarray, low: float, high: float):
        span = high - low
        mus = np.concatenate([obs, [0.5 * (low + high)]])
        order = np.argsort(mus, kind="stable")
        sorted_mu = mus[order]
        # bandwidth: larger gap to either sorted neighbor, bounds included
        padded = np.concatenate([[low], sorted_mu, [high]])
        gaps = np.maximum(padded[1:-1] - padded[:-2], padded[2:] - padded[1:-1])
        minimum = span / min(100.0, 1.0 + mus.size)
        sig = np.empty_like(mus)
        sig[order] = np.clip(gaps, minimum, span)
        sig[-1] = span  # prior
        self.mus, self.sigmas = mus, sig
        self.low, self.high = low, high
        self.weights = np.full(mus.size, 1.0 / mus.size)
        self.mass = ndtr((high - mus) / sig) - ndtr((low - mus) / sig)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        comp = rng.choice(self.mus.size, size=size, p=self.weights)
        mu, sig = self.mus[comp], self.sigmas[comp]
        lo, hi = ndtr((self.low - mu) / sig), ndtr((self.high - mu) / sig)
        u = lo + (hi - lo) * rng.random(size)
        return np.clip(mu + sig * ndtri(u), self.low, self.high)

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x)[:, None] - self.mus) / self.sigmas
        log_comp = -0.5 * z**2 - np.log(self.sigmas * _SQRT_2PI * self.mass)
        return logsumexp(log_comp + np.log(self.weights), axis=1)


def _tpe_propose(space: SearchSpace, Z: np.ndarray, values: np.ndarray, rng) -> np.ndarray:
    n = len(values)
    n_good = max(1, math.ceil(GAMMA * n))
    # stable sort on -value keeps earlier trials first among ties
    ranked = np.argsort(-values, kind="stable")
    good, bad = ranked[:n_good], ranked[n_good:]
    score = np.zeros(N_CANDIDATES)
    candidates = np.empty((N_CANDIDATES, len(space.dims)))
    for j, d in enumerate(space.dims):
        low, high = d.bounds
        l_model = _Parzen(Z[good, j], low, high)
        g_model = _Parzen(Z[bad, j], low, high)
        candidates[:, j] = l_model.sample(rng, N_CANDIDATES)
        score += l_model.logpdf(candidates[:, j]) - g_model.logpdf(candidates[:, j])
    return candidates[int(np.argmax(score))]


def optimize(
    objective: Objective,
    space: SearchSpace,
    trials: int,
    method: str = "tpe",
    seed: int = 0,
    n_startup: int = N_STARTUP,
) -> TrialLog:
    """Maximize ``objective`` over ``space``; non-finite values are logged as -inf."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if method not in ("random", "tpe"):
        raise ValueError(f"unknown method {method!r}")
    rng = np.random.default_rng(seed)
    log = TrialLog()
    Z = np.empty((trials, len(space.dims)))
    values = np.empty(trials)
    for i in range(trials):
        if method == "random" or i < n_startup:
            z = _uniform(space, rng)
        else:
            z = _tpe_propose(space, Z[:i], values[:i], rng)
        params = {d.name: d.to_value(zi) for d, zi in zip(space.dims, z)}
        Z[i] = [d.to_internal(params[d.name]) for d in space.dims]
        values[i] = _finite(objective(params))
        log.entries.append(Trial(i, params, values[i]))
    return log
