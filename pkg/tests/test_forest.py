import numpy as np
import pytest

from ptrlearn.forest import fit, predict_proba

from oracles import vote_predict


def blobs(rng, n=200):
    X = np.concatenate([rng.normal(0, 0.5, (n // 2, 2)), rng.normal(4, 0.5, (n // 2, 2))])
    return X, np.repeat([1, 2], n // 2)


def xor(rng, n=400):
    X = rng.random((n, 2))
    y = ((X[:, 0] > 0.5) ^ (X[:, 1] > 0.5)).astype(int) + 1
    return X, y


def test_single_point():
    m = fit([[0.3, 0.4]], [7], seed=0, n_trees=5)
    p = m.predict_proba(np.random.default_rng(0).random((10, 2)))
    np.testing.assert_array_equal(p, 1.0)
    assert m.predict([[9.0, 9.0]]).tolist() == [7]


def test_separable_training_accuracy(rng):
    X, y = blobs(rng)
    assert np.mean(fit(X, y, seed=0).predict(X) == y) == 1.0


def test_xor_generalizes(rng):
    X, y = xor(rng)
    cut = 280
    m = fit(X[:cut], y[:cut], seed=1)
    assert np.mean(m.predict(X[cut:]) == y[cut:]) >= 0.95


def test_proba_rows_and_duplicates(rng):
    X, y = xor(rng, 100)
    m = fit(X, y, seed=2, n_trees=20)
    Q = np.vstack([X[:5], X[:5]])
    p = predict_proba(m, Q)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(p >= 0)
    np.testing.assert_array_equal(p[:5], p[5:])


def test_argmax_matches_vote(rng):
    X, y = xor(rng, 150)
    m = fit(X, y, seed=3, n_trees=25)
    Q = rng.random((100, 2))
    np.testing.assert_array_equal(m.predict(Q), vote_predict(m, Q))


def test_leaf_histograms_count_training_rows(rng):
    X, y = blobs(rng, 60)
    m = fit(X, y, seed=4, n_trees=3)
    for tree in m.trees:
        leaves = np.flatnonzero(tree.feature < 0)
        assert tree.counts[leaves].sum() == 60
        # children partition the parent's samples
        inner = np.flatnonzero(tree.feature >= 0)
        np.testing.assert_array_equal(tree.counts[inner], tree.counts[tree.left[inner]] + tree.counts[tree.right[inner]])


def test_deterministic_and_defaults(rng):
    X, y = xor(rng, 80)
    a, b = fit(X, y, seed=5), fit(X, y, seed=5)
    assert a.n_trees == 100 and a.max_features == 2
    np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))


def test_unseen_classes_get_zero_probability(rng):
    m = fit(rng.random((10, 3)), [2] * 5 + [5] * 5, seed=0, n_trees=5)
    assert m.class_ids.tolist() == [2, 5] and m.predict_proba(rng.random((3, 3))).shape == (3, 2)


def test_errors():
    with pytest.raises(ValueError):
        fit(np.zeros((0, 2)), [])
    with pytest.raises(ValueError):
        fit([[0.0], [1.0]], [1])
    m = fit([[0.0, 1.0], [1.0, 0.0]], [1, 2], n_trees=2)
    with pytest.raises(ValueError):
        predict_proba(m, [[0.0, 1.0, 2.0]])
