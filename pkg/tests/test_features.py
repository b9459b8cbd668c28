import math

import numpy as np
import pytest

from gendersignal.corpus import Review
from gendersignal.errors import DataError
from gendersignal.features import (ConfounderVector, SentimentLexicon, confounder_vector, count_syllables,
                                   feature_matrix, format_vector, load_sentiment_lexicon, parse_vector,
                                   readability, sentiment, word_count)

LEX = load_sentiment_lexicon()


@pytest.mark.parametrize("text,n", [("I love it", 3), ("", 0), ("  a  b ", 2), ("one\ttwo\nthree", 3)])
def test_word_count(text, n):
    assert word_count(text) == n


@pytest.mark.parametrize("word,n", [("cat", 1), ("the", 1), ("table", 2), ("make", 1), ("reading", 2),
                                    ("beautiful", 3), ("free", 1), ("rhythm", 1), ("123", 1), ("a", 1)])
def test_syllables(word, n):
    assert count_syllables(word) == n


def test_readability_hand_value():
    # 3 words, 1 sentence, 3 syllables
    assert readability("The cat sat.") == pytest.approx(206.835 - 1.015 * 3 - 84.6 * 1, abs=1e-9)
    assert readability("The cat sat.") == pytest.approx(119.19, abs=1e-9)


def test_readability_empty_and_doubling():
    assert readability("") == 0.0
    assert readability("...") == 0.0
    t = "This is a longer sentence with several syllables. Short one!"
    assert readability(t + " " + t) == pytest.approx(readability(t), abs=1e-12)


def test_readability_without_terminal_punctuation():
    assert readability("the cat sat") == readability("the cat sat.")


def test_sentiment():
    lex = SentimentLexicon({"good": 1.0, "bad": -1.0, "meh": 0.2})
    assert sentiment("good GOOD good", lex) == 1.0
    assert sentiment("nothing here", lex) == 0.0
    assert sentiment("good bad", lex) == 0.0
    assert sentiment("meh good", lex) == pytest.approx(0.6)


def test_sentiment_lexicon_validation(tmp_path):
    with pytest.raises(DataError):
        SentimentLexicon({"x": 1.5})
    p = tmp_path / "s.tsv"
    p.write_text("Great\t0.8\n# c\n", encoding="utf-8")
    assert load_sentiment_lexicon(p).valences == {"great": 0.8}
    p.write_text("great 0.8\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_sentiment_lexicon(p)


def test_bundled_lexicon_in_range():
    assert LEX.valences
    assert all(-1 <= v <= 1 for v in LEX.valences.values())


def _review(text, ts=16000, rating=5):
    return Review("r", "u", "p", "n", rating, 0, 0, text, ts)


def test_confounder_vector():
    v = confounder_vector(_review("Great product."), LEX)
    assert (v.timestamp_days, v.rating, v.length_words) == (16000, 5, 2)
    assert v == confounder_vector(_review("Great product."), LEX)
    assert confounder_vector(_review(""), LEX) == ConfounderVector(16000, 0, 0.0, 0.0, 5)


def test_vector_round_trip_and_matrix():
    v = confounder_vector(_review("Pretty good, would buy again! Not bad."), LEX)
    assert parse_vector(format_vector(v)) == v
    m = feature_matrix([v, v])
    assert m.shape == (2, 5)
    assert np.array_equal(m[0], v.as_array())
    assert feature_matrix([]).shape == (0, 5)


def test_finite_on_odd_text():
    for t in ["!!!", "a", "x" * 500, "é ü ß 日本語", "1 2 3.", "\n\n"]:
        assert math.isfinite(readability(t))
        assert -1 <= sentiment(t, LEX) <= 1
