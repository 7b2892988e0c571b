import itertools

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from ptrlearn.coldstart import METHODS, coldstart_init, farthest_first, pam
from ptrlearn.data import Oracle
from ptrlearn.synthetic import two_gaussians


def tight_blobs(rng, k=4, per=15):
    centers = np.array([[0, 0], [10, 0], [0, 10], [10, 10], [5, 20]])[:k]
    X = np.concatenate([c + rng.normal(0, 0.1, (per, 2)) for c in centers])
    return X, np.repeat(np.arange(k), per)


@pytest.mark.parametrize("method", METHODS)
def test_exactly_b_queries(method):
    d = two_gaussians(0)
    o = Oracle(d.labels)
    pool = coldstart_init(method, d.features, 7, o, seed=1)
    assert o.query_count == 7 and pool.count("oracle") == 7 and pool.count("propagated") == 0
    for i, (label, _) in pool.entries.items():
        assert label == d.labels[i]
    assert len(pool.synthetic) == (7 if method == "km_me" else 0)


def test_km_me_synthetic_rows_copy_labels():
    d = two_gaussians(1)
    pool = coldstart_init("km_me", d.features, 4, Oracle(d.labels), seed=0)
    X, y = pool.training_set(d.features)
    assert X.shape[0] == 8
    labels = sorted(label for label, _ in pool.entries.values())
    assert sorted(label for _, label in pool.synthetic) == labels


def test_budget_bounds():
    X = np.random.default_rng(0).random((5, 2))
    with pytest.raises(ValueError):
        coldstart_init("rs", X, 6, Oracle(np.zeros(5, int)))
    with pytest.raises(ValueError):
        coldstart_init("rs", X, 0, Oracle(np.zeros(5, int)))
    with pytest.raises(ValueError):
        coldstart_init("dbscan", X, 2, Oracle(np.zeros(5, int)))


def test_rs_deterministic():
    X = np.random.default_rng(0).random((50, 2))
    a = coldstart_init("rs", X, 5, Oracle(np.zeros(50, int)), seed=9)
    b = coldstart_init("rs", X, 5, Oracle(np.zeros(50, int)), seed=9)
    assert a.entries == b.entries


def test_fft_hand_trace():
    X = np.array([[0.0], [1.0], [10.0]])
    assert farthest_first(X, 2, start=0).tolist() == [0, 2]
    # default start is the point nearest the centroid (11/3)
    assert farthest_first(X, 1).tolist() == [1]


@pytest.mark.parametrize("method", ["km", "km_me", "kmedoids", "ahc", "fft", "apc"])
def test_one_label_per_tight_blob(method):
    rng = np.random.default_rng(2)
    X, blob = tight_blobs(rng)
    pool = coldstart_init(method, X, 4, Oracle(blob), seed=0)
    assert sorted(blob[list(pool.entries)].tolist()) == [0, 1, 2, 3]


def test_pam_close_to_exhaustive():
    rng = np.random.default_rng(3)
    hits = 0
    for _ in range(10):
        X = rng.random((14, 2))
        D = cdist(X, X)
        med = pam(D, 3)
        best = min(D[list(c)].min(axis=0).sum() for c in itertools.combinations(range(14), 3))
        got = D[med].min(axis=0).sum()
        assert got <= best * 1.05
        hits += np.isclose(got, best)
    assert hits >= 7


def test_pam_swap_never_worse_than_build():
    rng = np.random.default_rng(4)
    X = rng.random((60, 2))
    D = cdist(X, X)
    assert D[pam(D, 4)].min(axis=0).sum() <= D[pam(D, 4, max_iter=0)].min(axis=0).sum() + 1e-12
