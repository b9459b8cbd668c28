"""Bag-of-words logistic regression baseline and token attribution.

Attribution reads the fitted coefficients directly: a token's contribution to
a text's score is its weight, so the tokens with the largest absolute weight
are the ones that push the prediction hardest.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, sparse

from ..errors import ConfigurationError

_TOKEN = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens split on whitespace and punctuation."""
    return _TOKEN.findall(text.casefold())


@dataclass(frozen=True)
class LinearModel:
    vocabulary: dict[str, int]
    weights: np.ndarray
    bias: float

    def decision(self, texts: Sequence[str]) -> np.ndarray:
        X = bag_of_words(texts, self.vocabulary)
        return X @ self.weights + self.bias

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        z = self.decision(texts)
        return 0.5 * (1.0 + np.tanh(0.5 * z))

    def weight(self, token: str) -> float | None:
        j = self.vocabulary.get(token)
        return None if j is None else float(self.weights[j])


def build_vocabulary(texts: Sequence[str], min_df: int = 1, max_features: int | None = None) -> dict[str, int]:
    """Tokens kept by document frequency: at least ``min_df`` documents, then
    the ``max_features`` most frequent (ties alphabetical)."""
    df: Counter = Counter()
    for t in texts:
        df.update(set(tokenize(t)))
    kept = sorted((tok for tok, c in df.items() if c >= min_df), key=lambda t: (-df[t], t))
    if max_features is not None:
        kept = kept[:max_features]
    return {tok: j for j, tok in enumerate(sorted(kept))}


def bag_of_words(texts: Sequence[str], vocabulary: dict[str, int]) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for i, t in enumerate(texts):
        c = Counter(tok for tok in tokenize(t) if tok in vocabulary)
        for tok in sorted(c):
            rows.append(i)
            cols.append(vocabulary[tok])
            vals.append(float(c[tok]))
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(texts), len(vocabulary)))


def train_logreg_baseline(texts: Sequence[str], labels: Sequence[int], *, min_df: int = 1,
                          max_features: int | None = 20000, l2: float = 1.0,
                          tol: float = 1e-8, max_iter: int = 500, seed: int = 0) -> LinearModel:
    """L2-regularised logistic regression on token counts (label 1 = male).

    The objective is convex and is minimised with L-BFGS from a zero start,
    so the fit is deterministic; ``seed`` is accepted for interface symmetry.
    """
    y = np.asarray(labels, dtype=np.float64)
    if len(texts) != y.size:
        raise ConfigurationError("texts and labels differ in length")
    if not np.isin(y, (0, 1)).all():
        raise ConfigurationError("labels must be 0 or 1")
    if len(np.unique(y)) < 2:
        raise ConfigurationError("training set needs both labels")
    vocab = build_vocabulary(texts, min_df, max_features)
    if not vocab:
        raise ConfigurationError("empty vocabulary after frequency cap")
    X = bag_of_words(texts, vocab)
    n = y.size
    s = 2 * y - 1

    def objective(theta):
        w, b = theta[:-1], theta[-1]
        m = s * (X @ w + b)
        # log(1 + exp(-m)) without overflow
        loss = np.logaddexp(0.0, -m).sum() / n + 0.5 * l2 / n * (w @ w)
        g = -s * (0.5 * (1.0 - np.tanh(0.5 * m))) / n
        grad = np.empty_like(theta)
        grad[:-1] = X.T @ g + l2 / n * w
        grad[-1] = g.sum()
        return loss, grad

    res = optimize.minimize(objective, np.zeros(len(vocab) + 1), jac=True, method="L-BFGS-B",
                            options={"gtol": tol, "ftol": tol * 1e-2, "maxiter": max_iter})
    return LinearModel(vocab, res.x[:-1].copy(), float(res.x[-1]))


def explain_tokens(model: LinearModel, text: str, k: int) -> list[tuple[str, float]]:
    """Up to ``k`` distinct in-vocabulary tokens of ``text`` ranked by absolute
    weight.  Weights are signed toward the predicted class: positive values
    support the prediction, negative ones argue against it."""
    if k <= 0:
        return []
    toks = sorted({t for t in tokenize(text) if t in model.vocabulary})
    if not toks:
        return []
    direction = 1.0 if model.decision([text])[0] >= 0 else -1.0
    ranked = sorted(toks, key=lambda t: (-abs(model.weight(t)), t))
    return [(t, direction * model.weight(t)) for t in ranked[:k]]
