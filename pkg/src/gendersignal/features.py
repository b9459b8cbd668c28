"""Matching confounders computed per review.

The numeric vector always has the component order of ``FEATURE_NAMES``;
covariance matrices and whitening transforms use the same layout.  The
product category is matched exactly and kept out of the vector.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import astuple, dataclass
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .corpus import Review
from .errors import DataError

FEATURE_NAMES = ("timestamp_days", "length_words", "readability", "sentiment", "rating")

_WORD = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_SENTENCE_END = re.compile(r"[.!?]+")
_VOWEL_GROUP = re.compile(r"[aeiouy]+")


@dataclass(frozen=True)
class ConfounderVector:
    timestamp_days: int
    length_words: int
    readability: float
    sentiment: float
    rating: int

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


@dataclass(frozen=True)
class SentimentLexicon:
    valences: Mapping[str, float]

    def __post_init__(self):
        for tok, v in self.valences.items():
            if not -1.0 <= v <= 1.0:
                raise DataError(f"valence of {tok!r} outside [-1, 1]: {v}")


def load_sentiment_lexicon(path=None) -> SentimentLexicon:
    if path is None:
        text = (resources.files("gendersignal") / "data" / "sentiment.tsv").read_text(encoding="utf-8")
    else:
        try:
            with open(os.fspath(path), encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
    vals = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        try:
            tok, v = ln.split("\t")
            vals[tok.strip().casefold()] = float(v)
        except ValueError:
            raise DataError(f"bad sentiment lexicon line: {ln!r}") from None
    return SentimentLexicon(vals)


def word_count(text: str) -> int:
    return len(text.split())


def count_syllables(word: str) -> int:
    """Vowel-group heuristic.

    Each run of ``aeiouy`` counts once; a final silent ``e`` (but not ``-le``)
    is dropped when the word has other vowel groups.  Every word has at least
    one syllable, including numbers and vowel-less words.
    """
    w = word.lower()
    n = len(_VOWEL_GROUP.findall(w))
    if n > 1 and w.endswith("e") and not w.endswith("le") and not w.endswith("ee"):
        n -= 1
    return max(n, 1)


def readability(text: str) -> float:
    """Flesch Reading Ease; 0 for text without words."""
    words = _WORD.findall(text)
    if not words:
        return 0.0
    sentences = max(len(_SENTENCE_END.findall(text)), 1)
    syllables = sum(count_syllables(w) for w in words)
    n = len(words)
    return 206.835 - 1.015 * (n / sentences) - 84.6 * (syllables / n)


def sentiment(text: str, lexicon: SentimentLexicon) -> float:
    vals = [lexicon.valences[t] for t in (w.casefold() for w in _WORD.findall(text))
            if t in lexicon.valences]
    if not vals:
        return 0.0
    return math.fsum(vals) / len(vals)


def confounder_vector(review: Review, lexicon: SentimentLexicon) -> ConfounderVector:
    return ConfounderVector(
        timestamp_days=review.timestamp,
        length_words=word_count(review.text),
        readability=readability(review.text),
        sentiment=sentiment(review.text, lexicon),
        rating=review.rating,
    )


def feature_matrix(vectors: Iterable[ConfounderVector]) -> np.ndarray:
    rows = [astuple(v) for v in vectors]
    if not rows:
        return np.empty((0, len(FEATURE_NAMES)))
    return np.asarray(rows, dtype=np.float64)


def format_vector(v: ConfounderVector) -> list[str]:
    return [str(v.timestamp_days), str(v.length_words), repr(v.readability),
            repr(v.sentiment), str(v.rating)]


def parse_vector(fields: list[str]) -> ConfounderVector:
    ts, length, read, sent, rating = fields
    return ConfounderVector(int(ts), int(length), float(read), float(sent), int(rating))
