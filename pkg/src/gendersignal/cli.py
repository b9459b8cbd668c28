"""Command-line pipeline.

Every stage reads its inputs from files written by earlier stages and writes
its outputs plus a JSON summary to ``<out-dir>/summaries/<stage>.json``::

    gendersignal synth    --out-dir run            # optional synthetic corpus
    gendersignal ingest   --reviews R --products P --out-dir run
    gendersignal signal   --out-dir run
    gendersignal train    --out-dir run
    gendersignal predict  --out-dir run
    gendersignal features --out-dir run
    gendersignal match    --out-dir run
    gendersignal estimate --out-dir run
    gendersignal report   --out-dir run

``gendersignal pipeline`` runs ingest through report in one go.  Settings
come from defaults, then the ``--config`` file, then command-line flags.
Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import shutil
import sys
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import effects as fx
from .corpus import CorpusStore, corpus_stats, helpfulness_score, ingest_corpus, review_names
from .errors import ConfigurationError, DataError, GenderSignalError, NumericError, PrerequisiteError
from .features import FEATURE_NAMES, confounder_vector, format_vector, load_sentiment_lexicon
from .groups import GROUP_TAGS, PAIR_GROUPS, pair_members
from .matching import CategoryData, balance_report, covariance_matrix, sample_and_match
from .signal import GenderSignal, classify_signal, load_keywords, load_lexicon

log = logging.getLogger("gendersignal")

STAGES = ("ingest", "signal", "train", "predict", "features", "match", "estimate", "report", "synth")
PIPELINE = ("ingest", "signal", "train", "predict", "features", "match", "estimate", "report")

# short category names used in reports -> category names in Amazon metadata
DEFAULT_CATEGORIES = {
    "Books": "Books",
    "Electronics": "Electronics",
    "CDs": "CDs & Vinyl",
    "Clothing": "Clothing, Shoes & Jewelry",
    "Home": "Home & Kitchen",
    "Kindle": "Kindle Store",
    "Sports": "Sports & Outdoors",
    "Cellphone": "Cell Phones & Accessories",
    "Toys": "Toys & Games",
    "Games": "Video Games",
    "Literature": "Literature & Fiction",
    "Beauty": "Beauty",
    "Health": "Health & Personal Care",
    "Movies": "Movies & TV",
    "Computers": "Computers & Accessories",
}

# output file names
STORE_DIR = "store"
SIGNALS = "signals.csv"
MODEL = "model.gscnn"
TRAINING_LOG = "training_log.csv"
BASELINE_TOKENS = "baseline_tokens.csv"
PREDICTIONS = "predictions.csv"
GROUPS = "groups.csv"
FEATURES = "features.csv"
PAIRS = "matched_pairs.csv"
BALANCE = "balance.csv"
BALANCE_STATS = "balance_stats.csv"
ESTIMATES = "estimates.csv"
QUADRANTS = "quadrants.csv"
OVERALL = "overall.csv"
RANK_CURVES = "rank_curves.csv"
SUMMARY_TXT = "summary.txt"
SYNTH_DIR = "synth"


@dataclass
class PipelineConfig:
    out_dir: str = "out"
    store: str = ""  # default: <out_dir>/store
    reviews: str = ""
    products: str = ""
    lexicon: str = ""  # empty: bundled file
    keywords_female: str = ""
    keywords_male: str = ""
    sentiment: str = ""
    seed: int = 0
    # classifier
    n_filters: int = 64
    hidden: int = 128
    keep_prob: float = 0.5
    batch_size: int = 64
    learning_rate: float = 0.003
    momentum: float = 0.9
    lr_decay: float = 0.5
    epochs: int = 3
    window: int = 1014
    pool_width: int = 3
    reverse: bool = False
    train_fraction: float = 0.8
    max_train_reviews: int = 0  # 0: no cap
    baseline: bool = True
    threshold: float = 0.7
    # matching and estimation
    categories: str = ",".join(DEFAULT_CATEGORIES)  # short names, or "all"
    match_n: int = 10000
    ridge: float = -1.0  # negative: default ridge
    global_covariance: bool = False
    bootstrap_b: int = 1000
    rank_k: int = 1000000
    balance_bins: int = 10
    # synthetic corpus
    synth_categories: str = "Electronics,Beauty,Books,Toys & Games"
    synth_per_group: int = 400
    synth_overlap: float = 0.3
    synth_mean_words: int = 40
    synth_noise: float = 1.0
    synth_base: float = 3.0
    synth_plant: str = ""  # "CAT=PCT" or "PG:CAT=PCT", ';'-separated
    category_map: dict = field(default_factory=dict)

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    @property
    def store_path(self) -> Path:
        return Path(self.store) if self.store else self.out / STORE_DIR

    def category_names(self, store: CorpusStore | None = None) -> dict[str, str]:
        """Short name -> metadata category name for the allow-list."""
        if self.categories.strip().lower() == "all":
            if store is None:
                return {}
            cats = sorted({c for p in store.products.values() for c in p.categories})
            return {c: c for c in cats}
        mapping = {**DEFAULT_CATEGORIES, **self.category_map}
        out = {}
        for short in _split(self.categories):
            out[short] = mapping.get(short, short)
        return out

    def hyperparams(self):
        from .perform.cnn import HyperParams

        return HyperParams(n_filters=self.n_filters, hidden=self.hidden, keep_prob=self.keep_prob,
                           batch_size=self.batch_size, learning_rate=self.learning_rate,
                           momentum=self.momentum, lr_decay=self.lr_decay, epochs=self.epochs,
                           seed=self.seed, window=self.window, pool_width=self.pool_width,
                           reverse=self.reverse)


def _split(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def _convert(name: str, kind, raw: str):
    try:
        if kind in (bool, "bool"):
            v = raw.strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"bad value for {name}: {raw!r}") from None


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig) if f.name != "category_map"}


def load_config(path) -> PipelineConfig:
    """Read a ``key = value`` file into a config.

    Keys are the field names of :class:`PipelineConfig`.  An optional
    ``[category_map]`` section maps short category names to metadata names.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[pipeline]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"bad config file {path}: {exc}") from None
    cfg = PipelineConfig()
    for key, raw in parser["pipeline"].items():
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"unknown config key {key!r}")
        setattr(cfg, key, _convert(key, _FIELD_TYPES[key], raw))
    if parser.has_section("category_map"):
        cfg.category_map = dict(parser["category_map"].items())
    for extra in parser.sections():
        if extra not in ("pipeline", "category_map"):
            raise ConfigurationError(f"unknown config section [{extra}]")
    return cfg


# -- small file helpers ---------------------------------------------------

def _write_csv(path: Path, header, rows) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)
            n += 1
    return n


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _f(x: float) -> str:
    return repr(float(x))


def _require(cfg: PipelineConfig, stage: str, *needs: tuple[str, Path]) -> None:
    for need, path in needs:
        if not path.exists():
            raise PrerequisiteError(stage, need)


def _write_summary(cfg: PipelineConfig, stage: str, summary: dict) -> dict:
    d = cfg.out / "summaries"
    d.mkdir(parents=True, exist_ok=True)
    summary = {"stage": stage, **summary}
    with open(d / f"{stage}.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _load_store(cfg: PipelineConfig, stage: str) -> CorpusStore:
    _require(cfg, stage, ("ingest", cfg.store_path / "reviews.jsonl"))
    return CorpusStore.load(cfg.store_path)


def _derived_seed(seed: int, *labels: str) -> int:
    ss = np.random.SeedSequence([seed] + [zlib.crc32(s.encode("utf-8")) for s in labels])
    return int(ss.generate_state(1)[0])


def _path_or_none(p: str):
    return p or None


# -- stages ---------------------------------------------------------------

def stage_ingest(cfg: PipelineConfig) -> dict:
    for name in ("reviews", "products"):
        p = getattr(cfg, name)
        if not p:
            raise ConfigurationError(f"ingest needs --{name}")
        if not Path(p).is_file():
            raise DataError(f"{name} input not found: {p}")
    store = ingest_corpus(cfg.reviews, cfg.products)
    if cfg.store_path.exists():
        shutil.rmtree(cfg.store_path)
    store.save(cfg.store_path)
    stats = corpus_stats(store)
    return {"input_lines": store.report.review_lines, "admitted": store.report.admitted,
            "skipped": store.report.skipped, "skipped_reasons": store.report.skipped_reasons,
            "products": store.report.products, "duplicate_products": store.report.duplicate_products,
            "orphan_reviews": store.report.orphan_reviews, "stats": asdict(stats)}


def stage_signal(cfg: PipelineConfig) -> dict:
    store = _load_store(cfg, "signal")
    lex = load_lexicon(_path_or_none(cfg.lexicon))
    kw = load_keywords(_path_or_none(cfg.keywords_female), _path_or_none(cfg.keywords_male))
    names = review_names(store)
    counts = {s.value: 0 for s in GenderSignal}
    rows = []
    for rid in sorted(names):
        s = classify_signal(names[rid], lex, kw)
        counts[s.value] += 1
        rows.append((rid, names[rid], s.value))
    _write_csv(cfg.out / SIGNALS, ["reviewer_id", "user_name", "signal"], rows)
    return {"reviewers_in": len(names), "reviewers_out": len(rows), "signals": counts}


def _signals(cfg: PipelineConfig, stage: str) -> dict[str, GenderSignal]:
    _require(cfg, stage, ("signal", cfg.out / SIGNALS))
    return {r["reviewer_id"]: GenderSignal(r["signal"]) for r in _read_csv(cfg.out / SIGNALS)}


def stage_train(cfg: PipelineConfig) -> dict:
    from .perform.cnn import save_checkpoint
    from .perform.train import (cnn_train, predict_proba, review_accuracy, split_by_user,
                                user_vote_accuracy)
    from .perform.vocab import CharVocabulary, encode_many

    store = _load_store(cfg, "train")
    signals = _signals(cfg, "train")
    hp = cfg.hyperparams()
    labeled = sorted((r for r in store if signals.get(r.reviewer_id) in (GenderSignal.MALE, GenderSignal.FEMALE)),
                     key=lambda r: r.review_id)
    if cfg.max_train_reviews and len(labeled) > cfg.max_train_reviews:
        rng = np.random.default_rng([cfg.seed, 3])
        keep = np.sort(rng.choice(len(labeled), size=cfg.max_train_reviews, replace=False))
        labeled = [labeled[i] for i in keep]
    y = np.array([1 if signals[r.reviewer_id] is GenderSignal.MALE else 0 for r in labeled])
    users = [r.reviewer_id for r in labeled]
    tr, te = split_by_user(users, cfg.train_fraction, cfg.seed)
    if tr.size == 0 or len(np.unique(y[tr])) < 2:
        raise ConfigurationError("training needs signaling reviewers of both genders")
    vocab = CharVocabulary()
    X = encode_many([r.text for r in labeled], vocab, hp.window, hp.reverse)
    holdout = (X[te], y[te]) if te.size else None
    model, tlog = cnn_train(X[tr], y[tr], hp, holdout=holdout)
    save_checkpoint(model, cfg.out / MODEL)
    tlog.write_csv(cfg.out / TRAINING_LOG)
    summary = {"labeled_reviews": len(labeled), "train_reviews": int(tr.size), "test_reviews": int(te.size),
               "train_reviewers": len({users[i] for i in tr}), "test_reviewers": len({users[i] for i in te}),
               "epochs": hp.epochs, "final_loss": tlog.losses[-1] if tlog.losses else None,
               "hyperparams": hp.to_dict()}
    if te.size:
        p = predict_proba(model, X[te])
        summary["review_accuracy"] = review_accuracy(p, y[te])
        summary["user_accuracy"] = user_vote_accuracy(p, y[te], [users[i] for i in te])
    if cfg.baseline:
        summary["baseline"] = _train_baseline(cfg, labeled, y, tr, te)
    return summary


def _train_baseline(cfg, labeled, y, tr, te) -> dict:
    from .perform.logreg import train_logreg_baseline

    texts = [r.text for r in labeled]
    try:
        lm = train_logreg_baseline([texts[i] for i in tr], y[tr], seed=cfg.seed)
    except ConfigurationError as exc:
        log.warning("baseline skipped: %s", exc)
        return {"skipped": str(exc)}
    order = sorted(lm.vocabulary, key=lambda t: (-lm.weights[lm.vocabulary[t]], t))
    top = order[:25] + [t for t in reversed(order[-25:]) if t not in order[:25]]
    _write_csv(cfg.out / BASELINE_TOKENS, ["token", "weight", "direction"],
               ((t, _f(lm.weight(t)), "male" if lm.weight(t) > 0 else "female") for t in top))
    out = {"vocabulary": len(lm.vocabulary)}
    if te.size:
        p = lm.predict_proba([texts[i] for i in te])
        out["review_accuracy"] = float(np.mean((p >= 0.5) == (y[te] == 1)))
    return out


def stage_predict(cfg: PipelineConfig) -> dict:
    from .perform.cnn import load_checkpoint
    from .perform.train import aggregate_user_label, assign_group, predict_proba
    from .perform.vocab import encode_many

    store = _load_store(cfg, "predict")
    signals = _signals(cfg, "predict")
    _require(cfg, "predict", ("train", cfg.out / MODEL))
    model = load_checkpoint(cfg.out / MODEL)
    unsignaled = sorted((r for r in store if signals.get(r.reviewer_id) is GenderSignal.NONE),
                        key=lambda r: r.review_id)
    probs = np.empty(0)
    if unsignaled:
        X = encode_many([r.text for r in unsignaled], model.vocab, model.hp.window, model.hp.reverse)
        probs = predict_proba(model, X)
    _write_csv(cfg.out / PREDICTIONS, ["review_id", "reviewer_id", "probability"],
               ((r.review_id, r.reviewer_id, _f(p)) for r, p in zip(unsignaled, probs)))
    per_user: dict[str, list[float]] = {}
    for r, p in zip(unsignaled, probs):
        per_user.setdefault(r.reviewer_id, []).append(float(p))
    counts = {g: 0 for g in GROUP_TAGS + ("UN",)}
    rows = []
    for rid in sorted(signals):
        label = aggregate_user_label(per_user.get(rid, []), cfg.threshold) if signals[rid] is GenderSignal.NONE else None
        g = assign_group(signals[rid], label).value
        counts[g] += 1
        rows.append((rid, signals[rid].value, label.label.value if label else "",
                     label.male_votes if label else "", label.female_votes if label else "",
                     label.abstained if label else "", g))
    _write_csv(cfg.out / GROUPS, ["reviewer_id", "signal", "performance", "male_votes", "female_votes",
                                  "abstained", "group"], rows)
    return {"reviews_scored": len(unsignaled), "reviewers_in": len(signals), "reviewers_out": len(rows),
            "groups": counts, "threshold": cfg.threshold}


def stage_features(cfg: PipelineConfig) -> dict:
    store = _load_store(cfg, "features")
    lexicon = load_sentiment_lexicon(_path_or_none(cfg.sentiment))
    cats = cfg.category_names(store)
    wanted = {meta: short for short, meta in cats.items()}
    rows, reviews_used, per_cat = [], 0, {short: 0 for short in cats}
    for rid in sorted(store.reviews):
        r = store.reviews[rid]
        hit = sorted(wanted[c] for c in store.categories_of(r) if c in wanted)
        if not hit:
            continue
        reviews_used += 1
        v = format_vector(confounder_vector(r, lexicon))
        for short in hit:
            rows.append([rid, *v, short])
            per_cat[short] += 1
    _write_csv(cfg.out / FEATURES, ["review_id", *FEATURE_NAMES, "category"], rows)
    return {"reviews_in": len(store), "reviews_with_category": reviews_used,
            "reviews_outside_categories": len(store) - reviews_used, "rows_out": len(rows),
            "rows_per_category": per_cat}


def _review_groups(cfg: PipelineConfig, stage: str, store: CorpusStore) -> dict[str, str]:
    _require(cfg, stage, ("predict", cfg.out / GROUPS))
    by_reviewer = {r["reviewer_id"]: r["group"] for r in _read_csv(cfg.out / GROUPS)}
    return {rid: by_reviewer.get(r.reviewer_id, "UN") for rid, r in store.reviews.items()}


def stage_match(cfg: PipelineConfig) -> dict:
    _require(cfg, "match", ("features", cfg.out / FEATURES))
    store = _load_store(cfg, "match")
    groups = _review_groups(cfg, "match", store)
    per_cat: dict[str, list] = {}
    all_rows = []
    for row in _read_csv(cfg.out / FEATURES):
        x = [float(row[k]) for k in FEATURE_NAMES]
        all_rows.append(x)
        g = groups.get(row["review_id"], "UN")
        if g in GROUP_TAGS:
            per_cat.setdefault(row["category"], []).append((row["review_id"], g, x))
    covariance = None
    if cfg.global_covariance and len(all_rows) >= 2:
        covariance = covariance_matrix(np.asarray(all_rows))
    ridge = None if cfg.ridge < 0 else cfg.ridge

    pair_rows, bal_rows, stat_rows, cells = [], [], [], []
    for cat in sorted(per_cat):
        entries = per_cat[cat]
        data = CategoryData(cat, [e[0] for e in entries], [e[1] for e in entries],
                            np.asarray([e[2] for e in entries], dtype=np.float64))
        vec = {e[0]: e[2] for e in entries}
        for pg in PAIR_GROUPS:
            a, b = pair_members(pg)
            if a not in data.groups and b not in data.groups:
                cells.append({"category": cat, "pair_group": pg, "sampled": 0, "pairs": 0, "unmatched": 0,
                              "skipped": "no reviews in either group"})
                continue
            res = sample_and_match(data, pg, cfg.match_n, cfg.seed, ridge=ridge, covariance=covariance)
            cells.append({"category": cat, "pair_group": pg, "sampled": res.sampled, "pairs": len(res.pairs),
                          "unmatched": res.unmatched})
            for p in res.pairs:
                pair_rows.append((pg, cat, p.treated_id, p.control_id, _f(p.distance)))
            if not res.pairs:
                continue
            side_a = [p.treated_id if p.treated_group == a else p.control_id for p in res.pairs]
            side_b = [p.control_id if p.treated_group == a else p.treated_id for p in res.pairs]
            for j, name in enumerate(FEATURE_NAMES):
                rep = balance_report([vec[i][j] for i in side_a], [vec[i][j] for i in side_b], cfg.balance_bins)
                e = rep["edges"]
                for k in range(len(e) - 1):
                    bal_rows.append((pg, cat, name, k, _f(e[k]), _f(e[k + 1]),
                                     int(rep["counts"][0][k]), int(rep["counts"][1][k])))
                for side, g in ((0, a), (1, b)):
                    stat_rows.append((pg, cat, name, g, _f(rep["mean"][side]), _f(rep["var"][side])))
    _write_csv(cfg.out / PAIRS, ["pair_group", "category", "treated_id", "control_id", "distance"], pair_rows)
    _write_csv(cfg.out / BALANCE, ["pair_group", "category", "feature", "bin", "lo", "hi",
                                   "count_side1", "count_side2"], bal_rows)
    _write_csv(cfg.out / BALANCE_STATS, ["pair_group", "category", "feature", "group", "mean", "var"], stat_rows)
    return {"categories": sorted(per_cat), "cells": cells, "pairs_out": len(pair_rows),
            "sampled": sum(c["sampled"] for c in cells), "unmatched": sum(c["unmatched"] for c in cells),
            "match_n": cfg.match_n, "global_covariance": cfg.global_covariance}


def stage_estimate(cfg: PipelineConfig) -> dict:
    _require(cfg, "estimate", ("match", cfg.out / PAIRS))
    store = _load_store(cfg, "estimate")
    groups = _review_groups(cfg, "estimate", store)
    cells: dict[tuple[str, str], tuple[list, list]] = {}
    n_in = 0
    for row in _read_csv(cfg.out / PAIRS):
        n_in += 1
        pg, cat = row["pair_group"], row["category"]
        a, _ = pair_members(pg)
        t, c = row["treated_id"], row["control_id"]
        first, second = (t, c) if groups[t] == a else (c, t)
        s1, s2 = cells.setdefault((pg, cat), ([], []))
        s1.append(helpfulness_score(store.reviews[first]))
        s2.append(helpfulness_score(store.reviews[second]))
    estimates = []
    for (pg, cat) in sorted(cells, key=lambda k: (k[1], PAIR_GROUPS.index(k[0]))):
        s1, s2 = cells[(pg, cat)]
        est = fx.bootstrap_advantage(s1, s2, cfg.bootstrap_b, _derived_seed(cfg.seed, "bootstrap", pg, cat),
                                     pair_group=pg, category=cat)
        if not (np.isfinite(est.mean_advantage_pct) and np.isfinite(est.standard_error)):
            raise NumericError(f"non-finite advantage for {pg} in {cat}")
        estimates.append(est)
    write_estimates(cfg.out / ESTIMATES, estimates)
    quads = fx.quadrant_classify(estimates)
    write_quadrants(cfg.out / QUADRANTS, quads)
    overall = fx.cross_category_mean(estimates)
    _write_csv(cfg.out / OVERALL, ["pair_group", "unweighted_mean_signed_advantage_pct", "categories"],
               ((pg, _f(v), sum(1 for e in estimates if e.pair_group == pg)) for pg, v in overall.items()))
    return {"pairs_in": n_in, "estimates_out": len(estimates), "quadrants_out": len(quads),
            "bootstrap_b": cfg.bootstrap_b, "degenerate": sum(e.degenerate_flag for e in estimates)}


def write_estimates(path: Path, estimates) -> int:
    return _write_csv(path, ["pair_group", "category", "favored_group", "advantage_pct", "std_err",
                             "n_pairs", "degenerate"],
                      ((e.pair_group, e.category, e.favored_group, _f(e.mean_advantage_pct),
                        _f(e.standard_error), e.n_pairs, int(e.degenerate_flag)) for e in estimates))


def read_estimates(path: Path) -> list[fx.AdvantageEstimate]:
    out = []
    for r in _read_csv(path):
        e = fx.estimate_from_magnitude(r["pair_group"], r["category"], r["favored_group"],
                                       float(r["advantage_pct"]), float(r["std_err"]), int(r["n_pairs"]))
        out.append(fx.AdvantageEstimate(e.pair_group, e.category, e.favored_group, e.mean_advantage_pct,
                                        e.standard_error, e.n_pairs, r["degenerate"] == "1",
                                        e.signed_mean_pct, e.point_pct))
    return out


def write_quadrants(path: Path, quads) -> int:
    return _write_csv(path, ["category", "x", "y", "quadrant"],
                      ((q.category, _f(q.x), _f(q.y), q.quadrant) for q in quads))


def summary_table(estimates, quads, overall: dict[str, float]) -> str:
    lines = ["Helpfulness advantage per category (bootstrap mean +- standard error)", ""]
    head = f"{'category':<24} {'pair':<6} {'favored':<8} {'advantage %':>12} {'std err':>9} {'pairs':>7}  flag"
    lines += [head, "-" * len(head)]
    for e in estimates:
        lines.append(f"{e.category:<24} {e.pair_group:<6} {e.favored_group:<8} {e.mean_advantage_pct:>12.2f} "
                     f"{e.standard_error:>9.2f} {e.n_pairs:>7d}  {'degenerate' if e.degenerate_flag else ''}".rstrip())
    lines += ["", "Quadrants (x: SM over PM, y: SW over PW; signed %)", ""]
    for q in quads:
        lines.append(f"{q.category:<24} x={q.x:>8.2f} y={q.y:>8.2f}  {q.quadrant}")
    lines += ["", "Unweighted mean over categories (signed %, positive favours the second group)", ""]
    for pg, v in overall.items():
        lines.append(f"{pg:<6} {v:>8.2f}")
    return "\n".join(lines) + "\n"


def stage_report(cfg: PipelineConfig) -> dict:
    _require(cfg, "report", ("estimate", cfg.out / ESTIMATES))
    store = _load_store(cfg, "report")
    groups = _review_groups(cfg, "report", store)
    estimates = read_estimates(cfg.out / ESTIMATES)
    quads = fx.quadrant_classify(estimates)
    overall = fx.cross_category_mean(estimates)
    by_group: dict[str, list] = {g: [] for g in GROUP_TAGS}
    for rid, g in groups.items():
        if g in by_group:
            by_group[g].append(store.reviews[rid])
    curve_rows = 0
    with open(cfg.out / RANK_CURVES, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "metric", "rank", "value"])
        for g in GROUP_TAGS:
            for metric in fx.METRICS:
                curve = fx.rank_curve(by_group[g], metric, cfg.rank_k, _derived_seed(cfg.seed, "rank", g), group=g)
                for rank, value in curve.points:
                    w.writerow([g, metric, rank, value])
                    curve_rows += 1
    (cfg.out / SUMMARY_TXT).write_text(summary_table(estimates, quads, overall), encoding="utf-8")
    return {"estimates_in": len(estimates), "summary_rows": len(estimates), "rank_curve_rows": curve_rows,
            "reviews_per_group": {g: len(v) for g, v in by_group.items()}}


def parse_plants(text: str, categories) -> dict[tuple[str, str], float]:
    """``CAT=PCT`` plants PCT in every pair group of CAT; ``PG:CAT=PCT`` plants one cell."""
    out: dict[tuple[str, str], float] = {}
    for item in (s.strip() for s in text.split(";")):
        if not item:
            continue
        key, sep, val = item.rpartition("=")
        if not sep:
            raise ConfigurationError(f"bad plant {item!r}; expected CAT=PCT or PG:CAT=PCT")
        value = _convert("synth_plant", float, val)
        pg, colon, cat = key.partition(":")
        if colon and pg.strip() in PAIR_GROUPS:
            out[(pg.strip(), cat.strip())] = value
        else:
            for g in PAIR_GROUPS:
                out[(g, key.strip())] = value
    for _, cat in out:
        if cat not in categories:
            raise ConfigurationError(f"plant names unknown category {cat!r}")
    return out


def stage_synth(cfg: PipelineConfig) -> dict:
    from .synth import SynthSpec, write_corpus

    cats = tuple(_split(cfg.synth_categories))
    spec = SynthSpec(categories=cats, reviews_per_group=cfg.synth_per_group, overlap=cfg.synth_overlap,
                     mean_words=cfg.synth_mean_words, noise=cfg.synth_noise,
                     base_helpfulness=cfg.synth_base, planted=parse_plants(cfg.synth_plant, cats),
                     seed=cfg.seed)
    out = cfg.out / SYNTH_DIR
    truth = write_corpus(spec, out)
    _write_csv(out / "planted_effects.csv", ["pair_group", "category", "signed_advantage_pct"],
               ((pg, cat, _f(truth.effects[(pg, cat)])) for cat in cats for pg in PAIR_GROUPS))
    counts = truth.counts()
    return {"reviews_out": len(truth.review_group), "reviewers_out": len(truth.reviewer_group),
            "counts": {f"{c}/{g}": n for (c, g), n in sorted(counts.items())},
            "reviews": str(out / "reviews.json"), "products": str(out / "products.json")}


_STAGE_FUNCS = {
    "ingest": stage_ingest, "signal": stage_signal, "train": stage_train, "predict": stage_predict,
    "features": stage_features, "match": stage_match, "estimate": stage_estimate, "report": stage_report,
    "synth": stage_synth,
}


def run_stage(cfg: PipelineConfig, stage: str) -> dict:
    """Run one stage and write its summary; returns the summary."""
    if stage not in _STAGE_FUNCS:
        raise ConfigurationError(f"unknown stage {stage!r}")
    cfg.out.mkdir(parents=True, exist_ok=True)
    log.info("stage %s", stage)
    return _write_summary(cfg, stage, _STAGE_FUNCS[stage](cfg))


def run_pipeline(cfg: PipelineConfig) -> dict:
    return {s: run_stage(cfg, s) for s in PIPELINE}


# -- argument parsing -----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_STAGE_FLAGS = {
    "ingest": ["reviews", "products"],
    "signal": ["lexicon", "keywords_female", "keywords_male"],
    "train": ["n_filters", "hidden", "keep_prob", "batch_size", "learning_rate", "momentum", "lr_decay",
              "epochs", "window", "pool_width", "reverse", "train_fraction", "max_train_reviews", "baseline"],
    "predict": ["threshold"],
    "features": ["categories", "sentiment"],
    "match": ["categories", "match_n", "ridge", "global_covariance", "balance_bins"],
    "estimate": ["bootstrap_b"],
    "report": ["rank_k"],
    "synth": ["synth_categories", "synth_per_group", "synth_overlap", "synth_mean_words", "synth_noise",
              "synth_base", "synth_plant"],
}
_STAGE_FLAGS["pipeline"] = sorted({f for s in PIPELINE for f in _STAGE_FLAGS[s]})

_HELP = {
    "reviews": "review JSON lines (optionally gzipped)",
    "products": "product metadata JSON lines (optionally gzipped)",
    "lexicon": "name lexicon TSV (default: bundled)",
    "keywords_female": "female keyword list (default: bundled)",
    "keywords_male": "male keyword list (default: bundled)",
    "sentiment": "sentiment lexicon TSV (default: bundled)",
    "categories": "comma-separated short category names, or 'all' (default: the 15 standard ones)",
    "ridge": "covariance ridge; negative selects 1e-8 * trace / 5",
    "global_covariance": "one covariance over all categories instead of per category",
    "max_train_reviews": "cap on labeled reviews used for training (0: no cap)",
    "baseline": "also fit the bag-of-words logistic regression",
    "synth_plant": "planted advantages: 'CAT=PCT' (all pair groups) or 'PG:CAT=PCT', ';'-separated",
    "threshold": "probability needed for a review to vote (default 0.7)",
}


def _add_flag(p: argparse.ArgumentParser, name: str) -> None:
    kind = _FIELD_TYPES[name]
    default = getattr(PipelineConfig(), name)
    flag = "--" + name.replace("_", "-")
    help_ = _HELP.get(name, "") + ("" if name in _HELP else f"(default {default!r})")
    if kind in (bool, "bool"):
        p.add_argument(flag, dest=name, default=None, type=lambda s, n=name: _convert(n, bool, s),
                       metavar="BOOL", help=help_)
    else:
        conv = {"int": int, "float": float}.get(kind if isinstance(kind, str) else kind.__name__, str)
        p.add_argument(flag, dest=name, default=None, type=conv, help=help_)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    common.add_argument("--store", default=None, help="corpus store directory (default <out-dir>/store)")
    common.add_argument("--out-dir", dest="out_dir", default=None, help="output directory (default ./out)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")
    parser = _Parser(prog="gendersignal", description="Gender signaling and performance in review helpfulness.")
    sub = parser.add_subparsers(dest="stage", required=True, parser_class=_Parser)
    for stage in STAGES + ("pipeline",):
        sp = sub.add_parser(stage, parents=[common], help=f"run the {stage} stage"
                            if stage != "pipeline" else "run ingest through report")
        for name in _STAGE_FLAGS[stage]:
            _add_flag(sp, name)
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    for name in ("seed", "store", "out_dir", *_STAGE_FLAGS.get(args.stage, ())):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.stage == "pipeline":
            run_pipeline(cfg)
        else:
            run_stage(cfg, args.stage)
    except GenderSignalError as exc:
        print(f"gendersignal: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
