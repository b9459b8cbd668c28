"""Mahalanobis nearest-neighbour matching between reviewer groups.

Distances are computed as Euclidean distances after whitening with the
inverse Cholesky factor of the pooled covariance.  Search is exact: a kd-tree
over the whitened pool, with a brute-force scan kept as the reference.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from . import _kernels
from .errors import ConfigurationError, NumericError
from .groups import PAIR_GROUPS, pair_members


def covariance_matrix(vectors) -> np.ndarray:
    """Unbiased sample covariance (divisor n - 1) of an (n, d) array."""
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ConfigurationError("covariance needs at least 2 vectors")
    centered = X - X.mean(axis=0)
    return centered.T @ centered / (X.shape[0] - 1)


def default_ridge(cov: np.ndarray) -> float:
    tr = float(np.trace(cov))
    return 1e-8 * tr / cov.shape[0] if tr > 0 else 1.0


def whitening_transform(cov: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Lower-triangular T with T (cov + ridge I) T^T = I."""
    cov = np.asarray(cov, dtype=np.float64)
    if not np.allclose(cov, cov.T, rtol=1e-12, atol=0):
        raise ConfigurationError("covariance matrix is not symmetric")
    a = cov + ridge * np.eye(cov.shape[0])
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NumericError("covariance is not positive definite; increase the ridge") from None
    return solve_triangular(L, np.eye(cov.shape[0]), lower=True)


def whiten(X, transform: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(X, dtype=np.float64) @ transform.T)


def _sq_dist(Y: np.ndarray, q: np.ndarray) -> np.ndarray:
    # fixed left-to-right summation so every search path rounds identically
    s = (Y[:, 0] - q[0]) * (Y[:, 0] - q[0])
    for d in range(1, Y.shape[1]):
        diff = Y[:, d] - q[d]
        s = s + diff * diff
    return s


def mahalanobis_distance(u, v, transform: np.ndarray) -> float:
    diff = transform @ (np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64))
    return float(np.sqrt(np.dot(diff, diff)))


class KDTree:
    """Exact 1-NN index over a fixed point set, median split on the widest axis."""

    def __init__(self, points, leaf_size: int = 16):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2:
            raise ConfigurationError("points must be a 2-d array")
        self.n, self.dim = pts.shape
        self.leaf_size = leaf_size
        perm = np.arange(self.n, dtype=np.int64)
        lo, hi, start, end, left, right = [], [], [], [], [], []

        def build(s: int, e: int) -> int:
            node = len(start)
            sub = pts[perm[s:e]]
            lo.append(sub.min(axis=0) if e > s else np.zeros(self.dim))
            hi.append(sub.max(axis=0) if e > s else np.zeros(self.dim))
            start.append(s)
            end.append(e)
            left.append(-1)
            right.append(-1)
            if e - s > leaf_size:
                axis = int(np.argmax(hi[node] - lo[node]))
                mid = (s + e) // 2
                order = np.argsort(sub[:, axis], kind="stable")
                perm[s:e] = perm[s:e][order]
                left[node] = build(s, mid)
                right[node] = build(mid, e)
            return node

        build(0, self.n)
        self.perm = perm
        self.points = np.ascontiguousarray(pts[perm])
        self.lo = np.ascontiguousarray(lo, dtype=np.float64).reshape(-1, self.dim)
        self.hi = np.ascontiguousarray(hi, dtype=np.float64).reshape(-1, self.dim)
        self.start = np.asarray(start, dtype=np.int64)
        self.end = np.asarray(end, dtype=np.int64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)

    def query(self, queries, exclude=None, backend: str | None = None):
        """Nearest original index and squared distance for each query row.

        Equal distances resolve to the smaller index; ``exclude`` holds one
        index per query (or -1) that must not be returned.
        """
        Q = np.ascontiguousarray(np.atleast_2d(queries), dtype=np.float64)
        if exclude is None:
            exclude = np.full(Q.shape[0], -1, dtype=np.int64)
        exclude = np.ascontiguousarray(exclude, dtype=np.int64)
        k = _kernels.get_backend(backend)
        return k.kdtree_query(self.points, self.perm, self.lo, self.hi, self.start,
                              self.end, self.left, self.right, Q, exclude)


def nearest_bruteforce(pool: np.ndarray, q: np.ndarray, exclude: int = -1) -> tuple[int, float]:
    """Linear scan; the correctness reference for :class:`KDTree`."""
    if pool.shape[0] == 0:
        return -1, float("inf")
    s = _sq_dist(pool, np.asarray(q, dtype=np.float64))
    if exclude >= 0:
        s[exclude] = np.inf
    m = s.min()
    if m == np.inf:
        return -1, m
    return int(np.flatnonzero(s == m)[0]), float(m)


@dataclass
class MatchPool:
    category: str
    group: str
    review_ids: list[str]  # sorted: position order is the tie-break order
    vectors: np.ndarray
    transform: np.ndarray
    whitened: np.ndarray = field(init=False)
    tree: KDTree = field(init=False)

    def __post_init__(self):
        self.whitened = whiten(self.vectors.reshape(-1, self.transform.shape[0]), self.transform)
        self.tree = KDTree(self.whitened)
        self._pos = {rid: i for i, rid in enumerate(self.review_ids)}

    def __len__(self):
        return len(self.review_ids)

    def position(self, review_id: str) -> int:
        return self._pos.get(review_id, -1)


@dataclass(frozen=True)
class MatchedPair:
    treated_id: str
    control_id: str
    distance: float
    category: str
    pair_group: str
    treated_group: str


@dataclass
class CategoryData:
    """Reviews of one category eligible for matching.

    ``groups[i]`` is the group tag (SM, SW, PM, PW) of review ``review_ids[i]``
    and ``X[i]`` its confounder vector.
    """

    category: str
    review_ids: list[str]
    groups: list[str]
    X: np.ndarray

    def select(self, group: str) -> tuple[list[str], np.ndarray]:
        rows = sorted((rid, i) for i, (rid, g) in enumerate(zip(self.review_ids, self.groups)) if g == group)
        ids = [r for r, _ in rows]
        X = self.X[[i for _, i in rows]] if rows else np.empty((0, self.X.shape[1] if self.X.ndim == 2 else 5))
        return ids, X


def build_pool(data: CategoryData, group: str, transform: np.ndarray) -> MatchPool:
    ids, X = data.select(group)
    return MatchPool(data.category, group, ids, X, transform)


def pooled_transform(data: CategoryData, pair_group: str, ridge: float | None = None,
                     covariance: np.ndarray | None = None) -> np.ndarray:
    """Whitening for a pair group: pooled two-group covariance unless one is given."""
    if covariance is None:
        a, b = pair_members(pair_group)
        Xa = data.select(a)[1]
        Xb = data.select(b)[1]
        covariance = covariance_matrix(np.vstack([Xa, Xb]))
    if ridge is None:
        ridge = default_ridge(covariance)
    return whitening_transform(covariance, ridge)


def nearest_match(treated_vector, pool: MatchPool, exclude: str | None = None,
                  treated_id: str = "", treated_group: str = "", pair_group: str = "") -> MatchedPair | None:
    """Closest pool entry to ``treated_vector``; None when the pool is empty."""
    q = whiten(np.asarray(treated_vector, dtype=np.float64).reshape(1, -1), pool.transform)
    ex = pool.position(exclude) if exclude is not None else -1
    idx, d2 = pool.tree.query(q, np.array([ex]))
    if idx[0] < 0:
        return None
    return MatchedPair(treated_id, pool.review_ids[idx[0]], float(np.sqrt(d2[0])),
                       pool.category, pair_group, treated_group)


def _stream_seed(seed: int, *labels: str) -> list[int]:
    return [seed] + [zlib.crc32(s.encode("utf-8")) for s in labels]


@dataclass
class MatchResult:
    pair_group: str
    category: str
    pairs: list[MatchedPair]
    sampled: int
    unmatched: int


def sample_and_match(data: CategoryData, pair_group: str, n: int, seed: int,
                     ridge: float | None = None, covariance: np.ndarray | None = None) -> MatchResult:
    """Sample treated reviews from both groups and pair each with its nearest
    review from the other group's full pool (controls may be reused)."""
    if pair_group not in PAIR_GROUPS:
        raise ConfigurationError(f"unknown pair group {pair_group!r}")
    if n <= 0:
        raise ConfigurationError("n must be positive")
    a, b = pair_members(pair_group)
    ids_a, _ = data.select(a)
    ids_b, _ = data.select(b)
    if not ids_a and not ids_b:
        raise ConfigurationError(f"no {a} or {b} reviews in category {data.category!r}")
    if not ids_a or not ids_b:
        union = sorted(ids_a + ids_b)
        k = min(n, len(union))
        return MatchResult(pair_group, data.category, [], k, k)

    transform = pooled_transform(data, pair_group, ridge, covariance)
    pools = {a: build_pool(data, a, transform), b: build_pool(data, b, transform)}
    union = sorted([(rid, a) for rid in ids_a] + [(rid, b) for rid in ids_b])
    rng = np.random.default_rng(_stream_seed(seed, pair_group, data.category))
    k = min(n, len(union))
    chosen = np.sort(rng.choice(len(union), size=k, replace=False))

    by_side: dict[str, list[int]] = {a: [], b: []}
    for i in chosen:
        by_side[union[i][1]].append(int(i))
    found: dict[int, MatchedPair] = {}
    unmatched = 0
    for side, rows in by_side.items():
        if not rows:
            continue
        other = pools[b if side == a else a]
        own = pools[side]
        tids = [union[i][0] for i in rows]
        Q = own.whitened[[own.position(t) for t in tids]]
        idx, d2 = other.tree.query(Q)
        for i, t, j, dd in zip(rows, tids, idx, d2):
            if j < 0:
                unmatched += 1
                continue
            found[i] = MatchedPair(t, other.review_ids[j], float(np.sqrt(dd)), data.category, pair_group, side)
    pairs = [found[i] for i in sorted(found)]
    return MatchResult(pair_group, data.category, pairs, k, unmatched)


def balance_report(side1: Sequence[float], side2: Sequence[float], bins: int = 10) -> dict:
    """Histogram, mean and variance of one confounder on each side of the pairs."""
    x1 = np.asarray(side1, dtype=np.float64)
    x2 = np.asarray(side2, dtype=np.float64)
    if x1.size == 0 or x2.size == 0:
        raise ConfigurationError("balance report needs non-empty sides")
    lo = min(x1.min(), x2.min())
    hi = max(x1.max(), x2.max())
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    c1, _ = np.histogram(x1, edges)
    c2, _ = np.histogram(x2, edges)
    return {
        "edges": edges,
        "counts": (c1, c2),
        "mean": (float(x1.mean()), float(x2.mean())),
        "var": (float(x1.var()), float(x2.var())),
    }
