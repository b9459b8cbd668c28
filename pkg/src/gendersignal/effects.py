"""Helpfulness advantages between matched groups, bootstrap errors, rank
curves and the signaling/performing quadrant summary."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Review, helpfulness_score
from .errors import ConfigurationError
from .groups import pair_members

log = logging.getLogger(__name__)

METRICS = ("upvotes", "downvotes", "helpfulness")

QUADRANTS = {
    (1, -1): "signaling-man favoured",
    (-1, 1): "signaling-woman favoured",
    (1, 1): "signaling favoured",
    (-1, -1): "performance favoured",
}
BOUNDARY = "boundary"


@dataclass(frozen=True)
class AdvantageEstimate:
    pair_group: str
    category: str
    favored_group: str  # a group tag or "none"
    mean_advantage_pct: float
    standard_error: float
    n_pairs: int
    degenerate_flag: bool
    signed_mean_pct: float = 0.0  # positive when the second group of the pair is favored
    point_pct: float = 0.0  # signed advantage on the full (un-resampled) pairs

    @property
    def signed_pct(self) -> float:
        return self.signed_mean_pct


@dataclass(frozen=True)
class RankCurve:
    group: str
    metric: str
    points: list[tuple[int, int]]


@dataclass(frozen=True)
class QuadrantPlacement:
    category: str
    x: float
    y: float
    quadrant: str


def group_mean_helpfulness(scores: Sequence[float]) -> float:
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ConfigurationError("no reviews on this side of the pairs")
    return float(s.mean())


def advantage(h1: float, h2: float) -> tuple[int, float, bool]:
    """Relative helpfulness gap between two group means.

    Returns ``(favored, magnitude_pct, degenerate)`` where ``favored`` is 1 or
    2 (0 when the means are equal).  The gap is taken relative to the smaller
    mean; when that mean is not positive the ratio is undefined and the gap is
    taken relative to the mean absolute value instead, with ``degenerate``
    set.
    """
    favored = 0 if h1 == h2 else (2 if h2 > h1 else 1)
    lo = min(h1, h2)
    gap = abs(h2 - h1)
    if lo > 0:
        return favored, gap / lo * 100.0, False
    denom = (abs(h1) + abs(h2)) / 2.0
    mag = 0.0 if gap == 0 else gap / denom * 100.0
    return favored, mag, True


def _signed(h1: np.ndarray, h2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = np.minimum(h1, h2)
    gap = np.abs(h2 - h1)
    degenerate = lo <= 0
    denom = np.where(degenerate, (np.abs(h1) + np.abs(h2)) / 2.0, lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(gap == 0, 0.0, gap / np.where(denom == 0, 1.0, denom) * 100.0)
    return np.sign(h2 - h1) * mag, degenerate


def bootstrap_advantage(side1: Sequence[float], side2: Sequence[float], b: int, seed: int,
                        pair_group: str = "", category: str = "") -> AdvantageEstimate:
    """Bootstrap the advantage over matched pairs.

    ``side1[i]`` and ``side2[i]`` are the helpfulness scores of the two reviews
    of pair ``i``.  Each replicate resamples whole pairs with replacement; its
    random stream is seeded by ``(seed, replicate index)``.  The estimate is the
    mean of the signed replicate advantages and the standard error is their
    standard deviation.
    """
    s1 = np.asarray(side1, dtype=np.float64)
    s2 = np.asarray(side2, dtype=np.float64)
    if s1.shape != s2.shape or s1.size == 0:
        raise ConfigurationError("bootstrap needs equally many, non-zero, paired scores")
    if b <= 0:
        raise ConfigurationError("bootstrap replicate count must be positive")
    n = s1.size
    h1 = np.empty(b)
    h2 = np.empty(b)
    for i in range(b):
        idx = np.random.default_rng([seed, i]).integers(0, n, size=n)
        h1[i] = s1[idx].mean()
        h2[i] = s2[idx].mean()
    reps, degenerate = _signed(h1, h2)
    point, point_deg = _signed(np.array([s1.mean()]), np.array([s2.mean()]))
    mean = float(reps.mean())
    se = float(reps.std(ddof=1)) if b > 1 else 0.0
    if np.all(reps == reps[0]):
        mean, se = float(reps[0]), 0.0
    a, c = pair_members(pair_group) if pair_group else ("1", "2")
    favored = "none" if mean == 0 else (c if mean > 0 else a)
    return AdvantageEstimate(
        pair_group=pair_group,
        category=category,
        favored_group=favored,
        mean_advantage_pct=abs(mean),
        standard_error=se,
        n_pairs=n,
        degenerate_flag=bool(degenerate.any() or point_deg[0]),
        signed_mean_pct=mean,
        point_pct=float(point[0]),
    )


def metric_value(review: Review, metric: str) -> int:
    if metric == "upvotes":
        return review.upvotes
    if metric == "downvotes":
        return review.downvotes
    if metric == "helpfulness":
        return helpfulness_score(review)
    raise ConfigurationError(f"unknown metric {metric!r}")


def rank_curve(reviews: Sequence[Review], metric: str, k: int, seed: int, group: str = "") -> RankCurve:
    if k <= 0:
        raise ConfigurationError("k must be positive")
    ordered = sorted(reviews, key=lambda r: r.review_id)
    if not ordered:
        return RankCurve(group, metric, [])
    rng = np.random.default_rng([seed, len(ordered)])
    take = rng.choice(len(ordered), size=min(k, len(ordered)), replace=False)
    values = sorted((metric_value(ordered[i], metric) for i in take), reverse=True)
    return RankCurve(group, metric, [(r + 1, v) for r, v in enumerate(values)])


def _sign(v: float) -> int:
    v = float(v)
    return (v > 0) - (v < 0)


def classify_point(x: float, y: float) -> str:
    key = (_sign(x), _sign(y))
    return QUADRANTS.get(key, BOUNDARY)


def quadrant_classify(estimates: Iterable[AdvantageEstimate]) -> list[QuadrantPlacement]:
    """Place each category by x = signaling-man advantage over performing men
    and y = signaling-woman advantage over performing women."""
    pm_sm, pw_sw = {}, {}
    for e in estimates:
        if e.pair_group == "PM-SM":
            pm_sm[e.category] = e.signed_mean_pct
        elif e.pair_group == "PW-SW":
            pw_sw[e.category] = e.signed_mean_pct
    out = []
    for cat in sorted(set(pm_sm) | set(pw_sw)):
        if cat not in pm_sm or cat not in pw_sw:
            log.warning("category %s lacks a PM-SM or PW-SW estimate; skipped", cat)
            continue
        x, y = pm_sm[cat], pw_sw[cat]
        out.append(QuadrantPlacement(cat, x, y, classify_point(x, y)))
    return out


def estimate_from_magnitude(pair_group: str, category: str, favored_group: str,
                            magnitude: float, se: float = 0.0, n_pairs: int = 0) -> AdvantageEstimate:
    """Build an estimate from a reported unsigned magnitude and its direction."""
    a, b = pair_members(pair_group)
    if favored_group not in (a, b, "none"):
        raise ConfigurationError(f"{favored_group!r} is not part of {pair_group}")
    signed = 0.0 if favored_group == "none" else (magnitude if favored_group == b else -magnitude)
    return AdvantageEstimate(pair_group, category, favored_group, abs(magnitude), se, n_pairs,
                             False, signed, signed)


def cross_category_mean(estimates: Iterable[AdvantageEstimate]) -> dict[str, float]:
    """Unweighted mean of the signed advantages per pair group."""
    acc: dict[str, list[float]] = {}
    for e in estimates:
        acc.setdefault(e.pair_group, []).append(e.signed_mean_pct)
    return {pg: math.fsum(v) / len(v) for pg, v in sorted(acc.items())}
