"""Two-Gaussian point clouds used by the tests and the graph comparison harness.

Three variants of the same mixture (120 points per bivariate Gaussian):

* ``two_gaussians``: unit spreads, centers 5.5 apart. Connected Rips graphs
  exist and the density shows two clearly prominent peaks.
* ``separated_gaussians``: unit spreads, centers 8 apart; the two classes
  form distinct connected components for a range of thresholds.
* ``overlapping_gaussians``: spreads 1 and 0.6, centers 4 apart. The tails
  touch, which is where a density-aware threshold pays off.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, preprocess


def gaussian_pair(seed: int, separation: float, spreads=(1.0, 1.0), n: int = 240):
    """Unnormalized sample ``(X, y)``; labels are 1 and 2."""
    rng = np.random.default_rng(seed)
    half = n // 2
    sizes = (half, n - half)
    centers = np.array([[0.0, 0.0], [separation, 0.0]])
    X = np.concatenate(
        [rng.normal(c, s, size=(m, 2)) for c, s, m in zip(centers, spreads, sizes)]
    )
    y = np.repeat([1, 2], sizes)
    return X, y


def two_gaussians(seed: int, n: int = 240) -> Dataset:
    return preprocess(*gaussian_pair(seed, 5.5, n=n), name=f"two_gaussians_{seed}")


def separated_gaussians(seed: int, n: int = 240) -> Dataset:
    return preprocess(*gaussian_pair(seed, 8.0, n=n), name=f"separated_gaussians_{seed}")


def overlapping_gaussians(seed: int, n: int = 240) -> Dataset:
    X, y = gaussian_pair(seed, 4.0, spreads=(1.0, 0.6), n=n)
    return preprocess(X, y, name=f"overlapping_gaussians_{seed}")


FIXTURES = {
    "two_gaussians": two_gaussians,
    "separated_gaussians": separated_gaussians,
    "overlapping_gaussians": overlapping_gaussians,
}
