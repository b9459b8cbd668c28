"""Seeded synthetic corpora with planted signals, writing styles and
helpfulness advantages.

Helpfulness votes are drawn as ``up ~ Poisson(max(m, 0) + d)`` and
``down ~ Poisson(max(-m, 0) + d)`` so that the expected helpfulness score of a
review in group g is exactly the planted group mean ``m``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .corpus import SECONDS_PER_DAY
from .effects import advantage
from .errors import ConfigurationError
from .features import load_sentiment_lexicon
from .groups import GROUP_TAGS, PAIR_GROUPS, pair_members
from .signal import GenderSignal, classify_signal, load_keywords, load_lexicon

STYLE = {"SM": "M", "PM": "M", "SW": "F", "PW": "F"}

_NEUTRAL_HANDLES = (
    "Kindle Customer", "Amazon Customer", "A Customer", "Book Lover", "Avid Reader",
    "Happy Shopper", "Music Fan", "Movie Buff", "Bargain Hunter", "Gadget Fan",
    "Home Cook", "Night Owl", "Road Warrior", "Coffee Addict", "Tech Fan",
)
_FEMALE_KEYWORD_NAMES = ("gamer girl {n}", "busy mom", "book lady {n}", "Queen Bee", "crafty woman")
_MALE_KEYWORD_NAMES = ("some dude", "game boy {n}", "proud dad", "Old Guy {n}", "the handyman man")
# separate syllable inventories give each style its own character n-grams
_SYLLABLES = {
    "M": ("ka", "tor", "dri", "gan", "rok", "zu", "bel", "xo", "tra", "mok", "vek", "gor"),
    "F": ("li", "sa", "mey", "nel", "fi", "wen", "ly", "pia", "ros", "eli", "cha", "ney"),
    "shared": ("po", "den", "hu", "qua", "sim", "jo", "ter", "ba", "nu", "cam", "ov", "ip"),
}


@dataclass
class SynthSpec:
    categories: tuple[str, ...] = ("Electronics", "Beauty", "Books", "Toys & Games")
    reviews_per_group: int = 400
    # optional explicit counts: {category: {group: count}}; groups SM SW PM PW UN
    counts: Mapping[str, Mapping[str, int]] | None = None
    overlap: float = 0.3
    style_vocab: int = 120
    shared_vocab: int = 120
    mean_words: int = 40
    reviews_per_reviewer: float = 3.0
    keyword_name_rate: float = 0.1
    # signed percent per (pair_group, category); positive favours the pair's second group
    planted: Mapping[tuple[str, str], float] = field(default_factory=dict)
    base_helpfulness: float = 3.0
    noise: float = 1.0  # extra up- and down-vote rate
    timestamp_shift: Mapping[str, float] = field(default_factory=dict)  # days per group
    products_per_category: int = 25
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.overlap <= 1:
            raise ConfigurationError("overlap must be in [0, 1]")
        for k, v in self.planted.items():
            if not math.isfinite(v):
                raise ConfigurationError(f"planted advantage for {k} is not finite")
            if k[0] not in PAIR_GROUPS:
                raise ConfigurationError(f"unknown pair group {k[0]!r}")
        for cat in self.categories:
            for g, n in self.group_counts(cat).items():
                if n < 0:
                    raise ConfigurationError("counts must be >= 0")

    def group_counts(self, category: str) -> dict[str, int]:
        if self.counts is not None:
            c = dict(self.counts.get(category, {}))
            return {g: int(c.get(g, 0)) for g in GROUP_TAGS + ("UN",)}
        return {**{g: self.reviews_per_group for g in GROUP_TAGS}, "UN": 0}


def _ratio(pct: float) -> float:
    return 1 + pct / 100 if pct >= 0 else 1 / (1 - pct / 100)


def group_means(spec: SynthSpec, category: str) -> dict[str, float]:
    """Expected helpfulness per group that realises the planted advantages."""
    def r(pg):
        return _ratio(spec.planted.get((pg, category), 0.0))

    m = {"PW": spec.base_helpfulness}
    m["PM"] = m["PW"] * r("PW-PM")
    m["SW"] = m["PW"] * r("PW-SW")
    m["SM"] = m["SW"] * r("SW-SM")
    implied = m["SM"] / m["PM"] if m["PM"] else math.inf
    if not math.isclose(implied, r("PM-SM"), rel_tol=1e-9):
        raise ConfigurationError(
            f"planted advantages for {category!r} are inconsistent: PM-SM must be "
            f"{(implied - 1) * 100 if implied >= 1 else -(1 / implied - 1) * 100:.6g}")
    m["UN"] = spec.base_helpfulness
    return m


def planted_truth(spec: SynthSpec) -> dict[tuple[str, str], float]:
    """Signed advantage per (pair_group, category) implied by the group means."""
    out = {}
    for cat in spec.categories:
        m = group_means(spec, cat)
        for pg in PAIR_GROUPS:
            a, b = pair_members(pg)
            fav, mag, _ = advantage(m[a], m[b])
            out[(pg, cat)] = 0.0 if fav == 0 else (mag if fav == 2 else -mag)
    return out


def _pseudo_words(rng, n: int, taken: set, inventory: str) -> list[str]:
    out = []
    syl = _SYLLABLES[inventory]
    while len(out) < n:
        w = "".join(rng.choice(syl, size=int(rng.integers(2, 4))))
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


@dataclass
class StyleProfiles:
    male: list[str]
    female: list[str]
    shared: list[str]


def style_profiles(spec: SynthSpec) -> StyleProfiles:
    rng = np.random.default_rng([spec.seed, 7919])
    taken: set = set()
    male = _pseudo_words(rng, spec.style_vocab, taken, "M")
    female = _pseudo_words(rng, spec.style_vocab, taken, "F")
    sentiment_words = sorted(load_sentiment_lexicon().valences)
    filler = ["the", "it", "this", "and", "was", "for", "with", "very", "is", "product"]
    shared = filler + sentiment_words
    shared += _pseudo_words(rng, max(spec.shared_vocab - len(shared), 0), taken, "shared")
    return StyleProfiles(male, female, shared)


@dataclass
class GroundTruth:
    review_group: dict[str, str]
    review_category: dict[str, str]
    reviewer_group: dict[str, str]
    effects: dict[tuple[str, str], float]
    group_means: dict[str, dict[str, float]]

    def counts(self) -> dict[tuple[str, str], int]:
        out: dict[tuple[str, str], int] = {}
        for rid, g in self.review_group.items():
            key = (self.review_category[rid], g)
            out[key] = out.get(key, 0) + 1
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["review_id", "reviewer_id", "category", "group"])
            for rid in sorted(self.review_group):
                reviewer = rid.split("_")[0]
                w.writerow([rid, reviewer, self.review_category[rid], self.review_group[rid]])


def _name_pools(spec):
    lex = load_lexicon()
    kw = load_keywords()
    male = sorted(n for n, l in lex.entries.items() if l == "male")
    female = sorted(n for n, l in lex.entries.items() if l == "female")
    neutral = [h for h in _NEUTRAL_HANDLES if classify_signal(h, lex, kw) is GenderSignal.NONE]
    return lex, kw, male, female, neutral


def _make_name(rng, group, pools, rate) -> str:
    lex, kw, male, female, neutral = pools
    n = int(rng.integers(1, 100))
    if group in ("SM", "SW"):
        if rng.random() < rate:
            tmpl = _MALE_KEYWORD_NAMES if group == "SM" else _FEMALE_KEYWORD_NAMES
            return tmpl[int(rng.integers(len(tmpl)))].format(n=n)
        first = (male if group == "SM" else female)[int(rng.integers(len(male if group == "SM" else female)))]
        return f"{first.title()} {chr(ord('A') + int(rng.integers(26)))}."
    handle = neutral[int(rng.integers(len(neutral)))]
    return handle if rng.random() < 0.5 else f"{handle} {n}"


def _make_text(rng, style: str, prof: StyleProfiles, spec: SynthSpec) -> str:
    n = max(3, int(rng.poisson(spec.mean_words)))
    own = prof.male if style == "M" else prof.female
    words = []
    for _ in range(n):
        pool = prof.shared if rng.random() < spec.overlap else own
        words.append(pool[int(rng.integers(len(pool)))])
    # sentences of 6-14 words
    out, i = [], 0
    while i < len(words):
        k = int(rng.integers(6, 15))
        sent = words[i:i + k]
        sent[0] = sent[0].capitalize()
        out.append(" ".join(sent) + ("!" if rng.random() < 0.1 else "."))
        i += k
    return " ".join(out)


def generate_corpus(spec: SynthSpec):
    """Return ``(review_lines, product_lines, GroundTruth)``.

    Lines are in the JSON formats that :func:`gendersignal.corpus.ingest_corpus`
    reads.  Each category draws from its own seeded stream.
    """
    import json

    prof = style_profiles(spec)
    pools = _name_pools(spec)
    review_lines, product_lines = [], []
    truth = GroundTruth({}, {}, {}, planted_truth(spec), {})
    reviewer_seq = 0
    rating_p = np.array([0.06, 0.06, 0.1, 0.28, 0.5])
    for ci, cat in enumerate(spec.categories):
        rng = np.random.default_rng([spec.seed, ci])
        means = group_means(spec, cat)
        truth.group_means[cat] = means
        asins = [f"B{ci:03d}{j:05d}" for j in range(spec.products_per_category)]
        for a in asins:
            product_lines.append(json.dumps({"asin": a, "categories": [[cat]]}))
        for group, count in spec.group_counts(cat).items():
            left = count
            while left > 0:
                k = min(left, len(asins), 1 + int(rng.poisson(max(spec.reviews_per_reviewer - 1, 0))))
                left -= k
                reviewer_seq += 1
                reviewer = f"U{reviewer_seq:07d}"
                name = _make_name(rng, group, pools, spec.keyword_name_rate)
                truth.reviewer_group[reviewer] = group
                style = STYLE.get(group)
                chosen = rng.choice(len(asins), size=k, replace=False)
                for j in range(k):
                    asin = asins[chosen[j]]
                    st = style or ("M" if rng.random() < 0.5 else "F")
                    text = _make_text(rng, st, prof, spec)
                    m = means[group]
                    up = int(rng.poisson(max(m, 0) + spec.noise))
                    down = int(rng.poisson(max(-m, 0) + spec.noise))
                    day = int(rng.integers(12000, 16000) + spec.timestamp_shift.get(group, 0))
                    rating = int(rng.choice(5, p=rating_p)) + 1
                    rid = f"{reviewer}_{asin}"
                    review_lines.append(json.dumps({
                        "reviewerID": reviewer, "reviewerName": name, "asin": asin,
                        "overall": float(rating), "helpful": [up, up + down],
                        "reviewText": text, "unixReviewTime": day * SECONDS_PER_DAY,
                    }))
                    truth.review_group[rid] = group
                    truth.review_category[rid] = cat
    return review_lines, product_lines, truth


def write_corpus(spec: SynthSpec, out_dir) -> GroundTruth:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reviews, products, truth = generate_corpus(spec)
    (out / "reviews.json").write_text("\n".join(reviews) + "\n", encoding="utf-8")
    (out / "products.json").write_text("\n".join(products) + "\n", encoding="utf-8")
    truth.write_csv(out / "ground_truth.csv")
    return truth
