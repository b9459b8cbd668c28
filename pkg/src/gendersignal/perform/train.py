"""Training loop, user-level split, inference and user aggregation."""
from __future__ import annotations

import csv
import enum
import hashlib
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigurationError
from ..groups import ReviewerGroup
from ..signal import GenderSignal
from .cnn import CnnModel, HyperParams, cnn_forward, cnn_loss_and_gradient, init_model
from .vocab import CharVocabulary, encode_indices

log = logging.getLogger(__name__)


def user_hash_fraction(reviewer_id: str, seed: int) -> float:
    h = hashlib.blake2b(f"{seed}:{reviewer_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(h, "little") / 2.0**64


def split_by_user(reviewer_ids: Sequence[str], fraction: float = 0.8, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of the train and test sides.

    A reviewer lands on the train side when a seeded hash of its id falls
    below ``fraction``, so all of a reviewer's reviews stay together and the
    assignment does not depend on row order.
    """
    if not 0 < fraction < 1:
        raise ConfigurationError("fraction must be in (0, 1)")
    memo: dict[str, bool] = {}
    train = np.zeros(len(reviewer_ids), dtype=bool)
    for i, rid in enumerate(reviewer_ids):
        side = memo.get(rid)
        if side is None:
            side = memo[rid] = user_hash_fraction(rid, seed) < fraction
        train[i] = side
    return np.flatnonzero(train), np.flatnonzero(~train)


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    holdout_accuracy: float
    learning_rate: float
    seconds: float


@dataclass
class TrainingLog:
    epochs: list[EpochRecord] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "mean_loss", "holdout_accuracy"])
            for r in self.epochs:
                acc = "" if np.isnan(r.holdout_accuracy) else repr(r.holdout_accuracy)
                w.writerow([r.epoch, repr(r.mean_loss), acc])

    @property
    def losses(self) -> list[float]:
        return [r.mean_loss for r in self.epochs]


def predict_proba(model: CnnModel, X: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Eval-mode probabilities for an (n, window) index array."""
    X = np.asarray(X)
    out = np.empty(X.shape[0], dtype=np.float64)
    for s in range(0, X.shape[0], batch_size):
        out[s:s + batch_size] = cnn_forward(model, X[s:s + batch_size], train_mode=False)
    return out


def predict_review(model: CnnModel, review, vocab: CharVocabulary | None = None) -> float:
    """Eval-mode probability that the author of ``review`` signals male."""
    vocab = vocab or CharVocabulary(model.alphabet)
    x = encode_indices(review.text, vocab, model.hp.window, model.hp.reverse)
    return float(cnn_forward(model, x[None, :], train_mode=False)[0])


def cnn_train(X: np.ndarray, y: Sequence[int], hp: HyperParams, holdout=None,
              progress: Callable[[EpochRecord], None] | None = None) -> tuple[CnnModel, TrainingLog]:
    """Minibatch SGD with momentum; the step is multiplied by ``hp.lr_decay``
    after any epoch whose mean loss does not improve on the best so far.

    ``X`` holds character index rows (see ``vocab.encode_many``) and ``y`` the
    labels (1 = man-signaling author).  ``holdout`` is an optional ``(X, y)``
    pair scored after every epoch.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X)
    if X.shape[0] == 0:
        raise ConfigurationError("empty training set")
    if len(np.unique(y)) < 2:
        raise ConfigurationError("training set needs both labels")
    model = init_model(hp)
    model.check_shapes()
    tlog = TrainingLog()
    if hp.epochs == 0:
        return model, tlog

    shuffle_rng = np.random.default_rng([hp.seed, 1])
    dropout_rng = np.random.default_rng([hp.seed, 2])
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    lr = hp.learning_rate
    best = np.inf
    n = X.shape[0]
    dtype = model.params["conv1.W"].dtype
    for epoch in range(1, hp.epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(n)
        total = 0.0
        for s in range(0, n, hp.batch_size):
            rows = np.sort(order[s:s + hp.batch_size])
            loss, grads = cnn_loss_and_gradient(model, X[rows], y[rows], train_mode=True, rng=dropout_rng)
            total += loss * rows.size
            step = dtype.type(lr)
            mu = dtype.type(hp.momentum)
            for k, g in grads.items():
                v = velocity[k]
                v *= mu
                v -= step * g
                model.params[k] += v
        mean_loss = total / n
        if not np.isfinite(mean_loss):
            from ..errors import NumericError
            raise NumericError(f"training diverged at epoch {epoch}")
        acc = float("nan")
        if holdout is not None and len(holdout[1]):
            p = predict_proba(model, holdout[0])
            acc = float(np.mean((p >= 0.5) == (np.asarray(holdout[1]) == 1)))
        rec = EpochRecord(epoch, mean_loss, acc, lr, time.perf_counter() - t0)
        tlog.epochs.append(rec)
        log.info("epoch %d loss %.4f holdout %.4f lr %.4g (%.1fs)", epoch, mean_loss, acc, lr, rec.seconds)
        if progress:
            progress(rec)
        if mean_loss < best:
            best = mean_loss
        else:
            lr *= hp.lr_decay
    return model, tlog


class Performance(str, enum.Enum):
    MALE = "PerformMale"
    FEMALE = "PerformFemale"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class PerformanceLabel:
    label: Performance
    male_votes: int = 0
    female_votes: int = 0
    abstained: int = 0


def aggregate_user_label(probabilities: Sequence[float], threshold: float = 0.7) -> PerformanceLabel:
    """Majority vote over a user's reviews.

    A review votes male when p >= threshold, female when p <= 1 - threshold,
    and abstains otherwise.  No votes or a tied vote gives Indeterminate.
    """
    if not 0.5 < threshold <= 1:
        raise ConfigurationError("threshold must be in (0.5, 1]")
    p = np.asarray(probabilities, dtype=np.float64)
    m = int(np.sum(p >= threshold))
    f = int(np.sum(p <= 1 - threshold))
    rest = int(p.size - m - f)
    if m > f:
        lab = Performance.MALE
    elif f > m:
        lab = Performance.FEMALE
    else:
        lab = Performance.INDETERMINATE
    return PerformanceLabel(lab, m, f, rest)


def assign_group(signal: GenderSignal, perf: PerformanceLabel | Performance | None) -> ReviewerGroup:
    if signal is GenderSignal.MALE:
        return ReviewerGroup.SIGNALING_MAN
    if signal is GenderSignal.FEMALE:
        return ReviewerGroup.SIGNALING_WOMAN
    label = perf.label if isinstance(perf, PerformanceLabel) else perf
    if label is Performance.MALE:
        return ReviewerGroup.PERFORMING_MAN
    if label is Performance.FEMALE:
        return ReviewerGroup.PERFORMING_WOMAN
    return ReviewerGroup.UNCLASSIFIED


def review_accuracy(p: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean((np.asarray(p) >= 0.5) == (np.asarray(y) == 1)))


def user_vote_accuracy(p: np.ndarray, y: np.ndarray, users: Sequence[str]) -> float:
    """Accuracy when every review takes its user's majority label (p >= 0.5
    votes male).  Tied users count as wrong."""
    p = np.asarray(p)
    y = np.asarray(y)
    votes: dict[str, list[int]] = {}
    for i, u in enumerate(users):
        votes.setdefault(u, []).append(i)
    correct = 0
    for rows in votes.values():
        m = int(np.sum(p[rows] >= 0.5))
        f = len(rows) - m
        if m == f:
            continue
        label = 1 if m > f else 0
        correct += int(np.sum(y[rows] == label))
    return correct / len(p) if len(p) else float("nan")
