import numpy as np
import pytest

from gendersignal.errors import ConfigurationError
from gendersignal.perform.logreg import (bag_of_words, build_vocabulary, explain_tokens, tokenize,
                                         train_logreg_baseline)

MALE = ["a solid drive", "solid build quality", "the case is solid", "solid and fast"]
FEMALE = ["so cute", "cute color and soft", "a cute bag", "the cute one"]
TEXTS = MALE + FEMALE
LABELS = [1] * 4 + [0] * 4


@pytest.fixture(scope="module")
def toy():
    return train_logreg_baseline(TEXTS, LABELS)


def test_tokenize():
    assert tokenize("Don't STOP, it's great!") == ["don't", "stop", "it's", "great"]


def test_separable_training_accuracy(toy):
    p = toy.predict_proba(TEXTS)
    assert np.array_equal(p >= 0.5, np.array(LABELS) == 1)


def test_explain_solid_first(toy):
    out = explain_tokens(toy, "a solid drive", 3)
    assert out[0][0] == "solid"
    assert out[0][1] > 0
    assert toy.weight("solid") > 0 > toy.weight("cute")


def test_explain_edge_cases(toy):
    assert explain_tokens(toy, "zebra quasar", 5) == []
    toks = explain_tokens(toy, "solid cute", 10)
    assert sorted(t for t, _ in toks) == ["cute", "solid"]
    assert explain_tokens(toy, "solid", 0) == []


def test_signed_toward_prediction(toy):
    # predicted female: cute supports it (positive), solid argues against (negative)
    out = dict(explain_tokens(toy, "cute cute cute solid", 2))
    assert out["cute"] > 0 > out["solid"]


def test_deterministic():
    a = train_logreg_baseline(TEXTS, LABELS, seed=1)
    b = train_logreg_baseline(TEXTS, LABELS, seed=1)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_errors():
    with pytest.raises(ConfigurationError):
        train_logreg_baseline(TEXTS, [1] * 8)
    with pytest.raises(ConfigurationError):
        train_logreg_baseline(TEXTS, LABELS, min_df=100)
    with pytest.raises(ConfigurationError):
        train_logreg_baseline(["", "!!"], [0, 1])


def test_frequency_cap():
    v = build_vocabulary(TEXTS, max_features=2)
    assert set(v) == {"solid", "cute"}
    X = bag_of_words(["solid solid cute x"], v)
    assert X.toarray().tolist() == [[2.0 if t == "solid" else 1.0 for t in sorted(v)]]
