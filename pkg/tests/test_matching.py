import numpy as np
import pytest
from scipy import linalg

from gendersignal.errors import ConfigurationError
from gendersignal.matching import (CategoryData, KDTree, balance_report, build_pool, covariance_matrix,
                                   default_ridge, mahalanobis_distance, nearest_bruteforce, nearest_match,
                                   sample_and_match, whiten, whitening_transform)


def two_pass_cov(X):
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    mean = [sum(X[:, j]) / n for j in range(d)]
    C = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            C[a, b] = sum((X[i, a] - mean[a]) * (X[i, b] - mean[b]) for i in range(n)) / (n - 1)
    return C


def test_covariance_cases():
    v = np.ones((2, 5))
    assert np.array_equal(covariance_matrix(v), np.zeros((5, 5)))
    X = np.zeros((2, 5))
    X[1, 0] = 2
    C = covariance_matrix(X)
    expected = np.zeros((5, 5))
    expected[0, 0] = 2
    assert np.array_equal(C, expected)
    with pytest.raises(ConfigurationError):
        covariance_matrix(np.zeros((1, 5)))


def test_covariance_matches_two_pass(rng):
    X = rng.normal(size=(100, 5)) * [1, 10, 100, 0.1, 3] + [1e4, 0, 5, 0, 2]
    assert np.allclose(covariance_matrix(X), two_pass_cov(X), rtol=1e-10, atol=0)


def test_whitening():
    assert np.array_equal(whitening_transform(np.eye(5), 0.0), np.eye(5))
    T = whitening_transform(np.diag([4.0, 1, 1, 1, 1]), 0.0)
    assert np.allclose(T, np.diag([0.5, 1, 1, 1, 1]))


def test_whitening_reconstruction(rng):
    A = rng.normal(size=(5, 5))
    cov = A @ A.T + 0.1 * np.eye(5)
    T = whitening_transform(cov, 0.0)
    assert np.allclose(T @ cov @ T.T, np.eye(5), atol=1e-8)
    assert np.allclose(np.tril(T), T)


def test_whitening_errors():
    with pytest.raises(ConfigurationError):
        whitening_transform(np.array([[1.0, 2.0], [0.0, 1.0]]))
    from gendersignal.errors import NumericError
    with pytest.raises(NumericError):
        whitening_transform(-np.eye(3), 0.0)


def test_ridge_default():
    cov = np.diag([5.0, 5, 5, 5, 5])
    assert default_ridge(cov) == pytest.approx(1e-8 * 25 / 5)
    assert default_ridge(np.zeros((5, 5))) == 1.0
    whitening_transform(np.zeros((5, 5)), default_ridge(np.zeros((5, 5))))


def test_mahalanobis():
    d = np.array([3.0, 4, 0, 0, 0])
    assert mahalanobis_distance(d, np.zeros(5), np.eye(5)) == 5.0
    assert mahalanobis_distance(d, d, np.eye(5)) == 0.0
    T = whitening_transform(np.diag([4.0, 1, 1, 1, 1]))
    assert mahalanobis_distance([2, 0, 0, 0, 0], np.zeros(5), T) == pytest.approx(1.0)


def test_mahalanobis_agrees_with_inverse_form(rng):
    A = rng.normal(size=(5, 5))
    cov = A @ A.T + np.eye(5)
    T = whitening_transform(cov)
    u, v = rng.normal(size=5), rng.normal(size=5)
    direct = np.sqrt((u - v) @ linalg.inv(cov) @ (u - v))
    assert mahalanobis_distance(u, v, T) == pytest.approx(direct, rel=1e-10)
    assert mahalanobis_distance(u, v, T) == mahalanobis_distance(v, u, T)


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_kdtree_matches_bruteforce(rng, backend):
    from gendersignal import _kernels
    if backend not in _kernels.BACKENDS:
        pytest.skip("extension not built")
    for n in (1, 2, 17, 300):
        P = rng.normal(size=(n, 5))
        P[n // 2:] = np.round(P[n // 2:], 1)  # plenty of ties
        tree = KDTree(P, leaf_size=4)
        Q = np.vstack([rng.normal(size=(40, 5)), P[:5], np.round(rng.normal(size=(20, 5)), 1)])
        ex = np.where(np.arange(Q.shape[0]) % 3 == 0, np.arange(Q.shape[0]) % n, -1)
        idx, d2 = tree.query(Q, ex, backend=backend)
        for q, e, i, d in zip(Q, ex, idx, d2):
            bi, bd = nearest_bruteforce(P, q, e)
            assert (i, d) == (bi, bd)


def test_kdtree_exclusion_of_only_point():
    tree = KDTree(np.zeros((1, 5)))
    idx, d2 = tree.query(np.zeros((1, 5)), np.array([0]))
    assert idx[0] == -1 and np.isinf(d2[0])


def _cat(rows):
    ids = [r[0] for r in rows]
    groups = [r[1] for r in rows]
    X = np.array([r[2] for r in rows], dtype=np.float64)
    return CategoryData("Books", ids, groups, X)


def test_nearest_match_basics():
    data = _cat([("b", "PW", [0, 0, 0, 0, 0]), ("a", "PW", [1, 1, 1, 1, 1]), ("c", "PM", [1, 1, 1, 1, 1])])
    pool = build_pool(data, "PW", np.eye(5))
    assert pool.review_ids == ["a", "b"]
    m = nearest_match([1, 1, 1, 1, 1], pool)
    assert m.control_id == "a" and m.distance == 0.0
    m = nearest_match([1, 1, 1, 1, 1], pool, exclude="a")
    assert m.control_id == "b"
    # equidistant: smaller review_id wins
    tie = _cat([("z", "PW", [1, 0, 0, 0, 0]), ("y", "PW", [-1, 0, 0, 0, 0])])
    assert nearest_match(np.zeros(5), build_pool(tie, "PW", np.eye(5))).control_id == "y"
    empty = build_pool(data, "SM", np.eye(5))
    assert len(empty) == 0 and nearest_match(np.zeros(5), empty) is None


def test_pool_independent_of_order(rng):
    rows = [(f"r{i}", "PW" if i % 2 else "SW", list(rng.normal(size=5))) for i in range(30)]
    a = build_pool(_cat(rows), "PW", np.eye(5))
    b = build_pool(_cat(rows[::-1]), "PW", np.eye(5))
    assert a.review_ids == b.review_ids and np.array_equal(a.vectors, b.vectors)


def test_sample_and_match_singletons():
    data = _cat([("t", "PW", [0, 0, 0, 0, 0]), ("c", "PM", [1, 2, 3, 4, 5])])
    res = sample_and_match(data, "PW-PM", 1, seed=0)
    assert len(res.pairs) == 1 and res.sampled == 1 and res.unmatched == 0
    p = res.pairs[0]
    assert {p.treated_id, p.control_id} == {"t", "c"}


def test_sample_and_match_properties(rng):
    rows = [(f"r{i:03d}", ["PW", "PM", "SW"][i % 3], list(rng.normal(size=5))) for i in range(300)]
    data = _cat(rows)
    groups = dict((r[0], r[1]) for r in rows)
    a = sample_and_match(data, "PW-PM", 50, seed=7)
    b = sample_and_match(data, "PW-PM", 50, seed=7)
    assert a.pairs == b.pairs
    assert len(a.pairs) == 50 and a.sampled == 50
    for p in a.pairs:
        assert p.treated_id != p.control_id
        assert {groups[p.treated_id], groups[p.control_id]} == {"PW", "PM"}
        assert p.category == "Books" and p.pair_group == "PW-PM"
        assert groups[p.treated_id] == p.treated_group
    assert len({p.treated_id for p in a.pairs}) == 50
    c = sample_and_match(data, "PW-PM", 50, seed=8)
    assert c.pairs != a.pairs
    big = sample_and_match(data, "PW-PM", 10_000, seed=7)
    assert big.sampled == 200 and len(big.pairs) == 200


def test_sample_and_match_empty_sides():
    data = _cat([("a", "PW", [0] * 5), ("b", "PW", [1] * 5)])
    res = sample_and_match(data, "PW-PM", 5, seed=0)
    assert res.pairs == [] and res.unmatched == 2
    with pytest.raises(ConfigurationError):
        sample_and_match(data, "SW-SM", 5, seed=0)
    with pytest.raises(ConfigurationError):
        sample_and_match(data, "PW-PM", 0, seed=0)


def test_balance_report():
    rep = balance_report([1, 2, 3], [1, 2, 3], bins=4)
    assert np.array_equal(rep["counts"][0], rep["counts"][1])
    assert rep["mean"] == (2.0, 2.0)
    assert rep["counts"][0].sum() == 3
    rep = balance_report([5, 5], [5, 5])
    assert rep["var"] == (0.0, 0.0)
    with pytest.raises(ConfigurationError):
        balance_report([], [1])


def test_matching_reduces_imbalance(rng):
    # PM reviews are shifted in the first confounder; matched PM controls should sit closer to PW
    n = 400
    pw = rng.normal(size=(n, 5))
    pm = rng.normal(size=(n, 5))
    pm[:, 0] += 1.0
    rows = [(f"w{i:03d}", "PW", list(pw[i])) for i in range(n)] + [(f"m{i:03d}", "PM", list(pm[i])) for i in range(n)]
    data = _cat(rows)
    res = sample_and_match(data, "PW-PM", 200, seed=1)
    X = dict((r[0], r[2]) for r in rows)
    side_w = [X[p.treated_id if p.treated_group == "PW" else p.control_id][0] for p in res.pairs]
    side_m = [X[p.control_id if p.treated_group == "PW" else p.treated_id][0] for p in res.pairs]
    rep = balance_report(side_w, side_m)
    matched_gap = abs(rep["mean"][0] - rep["mean"][1])
    raw_gap = abs(pw[:, 0].mean() - pm[:, 0].mean())
    assert matched_gap < raw_gap


def test_whiten_shape():
    assert whiten(np.zeros((0, 5)), np.eye(5)).shape == (0, 5)
