import logging
import math

import numpy as np
import pytest

from gendersignal.corpus import Review
from gendersignal.effects import (BOUNDARY, AdvantageEstimate, advantage, bootstrap_advantage, classify_point,
                                  cross_category_mean, estimate_from_magnitude, group_mean_helpfulness,
                                  quadrant_classify, rank_curve)
from gendersignal.errors import ConfigurationError


def test_group_mean():
    assert group_mean_helpfulness([3, 5]) == 4.0
    assert group_mean_helpfulness([0, 0]) == 0.0
    assert group_mean_helpfulness([7]) == 7.0
    with pytest.raises(ConfigurationError):
        group_mean_helpfulness([])


@pytest.mark.parametrize("h1,h2,out", [
    (2.0, 2.0, (0, 0.0, False)),
    (1.0, 1.5, (2, 50.0, False)),
    (1.5, 1.0, (1, 50.0, False)),
    (-1.0, 1.0, (2, 200.0, True)),
    (0.0, 0.0, (0, 0.0, True)),
    (0.0, 2.0, (2, 200.0, True)),
])
def test_advantage(h1, h2, out):
    assert advantage(h1, h2) == out


def test_constant_pairs_zero_se():
    est = bootstrap_advantage([2, 2, 2], [3, 3, 3], b=50, seed=1, pair_group="PW-PM", category="Books")
    assert est.standard_error == 0.0
    assert est.mean_advantage_pct == pytest.approx(50.0)
    assert est.favored_group == "PM" and est.n_pairs == 3


def test_identical_sides_favor_none():
    est = bootstrap_advantage([1, 2, 3], [1, 2, 3], b=30, seed=0, pair_group="SW-SM")
    assert est.favored_group == "none" and est.mean_advantage_pct == 0.0 and est.standard_error == 0.0


def test_bootstrap_deterministic_and_order_free(rng):
    s1 = rng.poisson(3, 200)
    s2 = rng.poisson(4, 200)
    a = bootstrap_advantage(s1, s2, b=200, seed=9, pair_group="PW-SW")
    b = bootstrap_advantage(s1, s2, b=200, seed=9, pair_group="PW-SW")
    assert a == b
    assert a.favored_group == "SW"
    assert a.signed_mean_pct > 0 and a.standard_error > 0
    assert a.point_pct == pytest.approx(advantage(s1.mean(), s2.mean())[1])


def test_bootstrap_degenerate_flag():
    est = bootstrap_advantage([-1, -2, 0], [1, 2, 0], b=20, seed=0, pair_group="PW-PM")
    assert est.degenerate_flag
    assert math.isfinite(est.mean_advantage_pct)


def test_bootstrap_errors():
    with pytest.raises(ConfigurationError):
        bootstrap_advantage([], [], b=10, seed=0)
    with pytest.raises(ConfigurationError):
        bootstrap_advantage([1], [1, 2], b=10, seed=0)
    with pytest.raises(ConfigurationError):
        bootstrap_advantage([1], [1], b=0, seed=0)


def _r(i, up, down):
    return Review(f"r{i}", "u", "p", "n", 5, up, down, "", 0)


def test_rank_curve():
    reviews = [_r(0, 5, 0), _r(1, 1, 0), _r(2, 3, 0)]
    c = rank_curve(reviews, "helpfulness", 3, seed=0, group="SM")
    assert c.points == [(1, 5), (2, 3), (3, 1)]
    assert rank_curve(reviews, "upvotes", 3, seed=4).points[0] == (1, 5)
    (only,) = rank_curve(reviews, "upvotes", 1, seed=4).points
    assert only[0] == 1 and only[1] in (5, 1, 3)
    assert rank_curve(reviews, "downvotes", 2, 1) == rank_curve(reviews, "downvotes", 2, 1)
    assert rank_curve([], "upvotes", 5, 0).points == []
    with pytest.raises(ConfigurationError):
        rank_curve(reviews, "stars", 2, 0)
    with pytest.raises(ConfigurationError):
        rank_curve(reviews, "upvotes", 0, 0)


def test_rank_curve_k1_is_max_of_full_sample():
    reviews = [_r(i, i % 7, 0) for i in range(20)]
    full = rank_curve(reviews, "upvotes", 20, 0)
    assert full.points[0][1] == 6
    vals = [v for _, v in full.points]
    assert vals == sorted(vals, reverse=True)


@pytest.mark.parametrize("x,y,q", [
    (16.4, -38.5, "signaling-man favoured"),
    (-3, 4, "signaling-woman favoured"),
    (1, 1, "signaling favoured"),
    (-1, -1, "performance favoured"),
    (0, 5, BOUNDARY),
    (5, 0, BOUNDARY),
])
def test_classify_point(x, y, q):
    assert classify_point(x, y) == q


def test_quadrant_from_reported_directions():
    est = [estimate_from_magnitude("PM-SM", "Electronics", "SM", 16.4),
           estimate_from_magnitude("PW-SW", "Electronics", "PW", 38.5)]
    (q,) = quadrant_classify(est)
    assert (q.x, q.y) == (16.4, -38.5)
    assert q.quadrant == "signaling-man favoured"


def test_quadrant_skips_missing(caplog):
    est = [estimate_from_magnitude("PM-SM", "Books", "SM", 3.0)]
    with caplog.at_level(logging.WARNING):
        assert quadrant_classify(est) == []
    assert "Books" in caplog.text


def test_estimate_from_magnitude_checks_group():
    with pytest.raises(ConfigurationError):
        estimate_from_magnitude("PM-SM", "Books", "PW", 1.0)
    e = estimate_from_magnitude("PM-SM", "Books", "none", 0.0)
    assert e.signed_mean_pct == 0.0


def test_cross_category_mean():
    est = [AdvantageEstimate("PW-PM", c, "", 0, 0, 1, False, v) for c, v in (("a", 10.0), ("b", -4.0))]
    assert cross_category_mean(est) == {"PW-PM": 3.0}
    assert cross_category_mean([]) == {}


def test_replicates_follow_indexed_streams(rng):
    s1, s2 = rng.poisson(3, 50).astype(float), rng.poisson(5, 50).astype(float)
    reps = []
    for i in range(3):
        idx = np.random.default_rng([11, i]).integers(0, 50, size=50)
        h1, h2 = s1[idx].mean(), s2[idx].mean()
        fav, mag, _ = advantage(h1, h2)
        reps.append(mag if fav == 2 else -mag)
    est = bootstrap_advantage(s1, s2, b=3, seed=11)
    assert est.signed_mean_pct == pytest.approx(np.mean(reps), rel=1e-12)
    assert est.standard_error == pytest.approx(np.std(reps, ddof=1), rel=1e-12)
