"""Review corpus: record parsing, the on-disk store, and corpus statistics.

Review input is newline-delimited JSON in the public Amazon review release
layout::

    {"reviewerID": ..., "reviewerName": ..., "asin": ..., "overall": 5.0,
     "helpful": [yes, total], "reviewText": ..., "unixReviewTime": 1400000000}

Product metadata is newline-delimited JSON with ``asin`` and ``categories``
(a list of category paths).  Both may be gzip-compressed.
"""
from __future__ import annotations

import gzip
import io
import json
import os
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DataError, ParseError

SECONDS_PER_DAY = 86400

REVIEW_FILE = "reviews.jsonl"
PRODUCT_FILE = "products.jsonl"
INDEX_FILE = "index.json"
INGEST_FILE = "ingest.json"


@dataclass(frozen=True)
class Review:
    review_id: str
    reviewer_id: str
    product_id: str
    user_name: str
    rating: int
    upvotes: int
    downvotes: int
    text: str
    timestamp: int  # days since 1970-01-01


@dataclass(frozen=True)
class Product:
    product_id: str
    categories: frozenset[str]


@dataclass
class CorpusStats:
    review_count: int = 0
    reviewer_count: int = 0
    product_count: int = 0
    category_count: int = 0
    mean_words_per_review: float | None = None
    mean_rating: float | None = None
    mean_upvotes: float | None = None
    mean_downvotes: float | None = None


def helpfulness_score(review: Review) -> int:
    """Upvotes minus downvotes; negative when a review is mostly voted down."""
    return review.upvotes - review.downvotes


def make_review_id(reviewer_id: str, product_id: str) -> str:
    # the release has no review key; (reviewer, product) is unique after dedup
    return f"{reviewer_id}_{product_id}"


def _require(obj: dict, key: str, lineno: int | None):
    if key not in obj or obj[key] is None:
        raise ParseError(f"missing field {key!r}", lineno)
    return obj[key]


def _as_int(value, name: str, lineno: int | None) -> int:
    if isinstance(value, bool):
        raise ParseError(f"field {name!r} is not a number", lineno)
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            f = float(value)
        except ValueError:
            pass
        else:
            if f.is_integer():
                return int(f)
    raise ParseError(f"field {name!r} is not an integer: {value!r}", lineno)


def parse_review_record(line: str, lineno: int | None = None) -> Review:
    """Parse one JSON review line.

    Raises
    ------
    ParseError
        Malformed JSON, a missing field or a field of the wrong type.  The
        line number is carried along so callers can report it.
    DataError
        The vote pair is inconsistent (``yes > total``) or the rating is
        outside 1..5.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", lineno)

    reviewer_id = str(_require(obj, "reviewerID", lineno))
    product_id = str(_require(obj, "asin", lineno))
    name = _require(obj, "reviewerName", lineno)
    text = _require(obj, "reviewText", lineno)
    if not isinstance(name, str) or not isinstance(text, str):
        raise ParseError("reviewerName and reviewText must be strings", lineno)
    rating = _as_int(_require(obj, "overall", lineno), "overall", lineno)
    helpful = _require(obj, "helpful", lineno)
    if not isinstance(helpful, (list, tuple)) or len(helpful) != 2:
        raise ParseError("helpful must be a two-element array", lineno)
    yes = _as_int(helpful[0], "helpful", lineno)
    total = _as_int(helpful[1], "helpful", lineno)
    seconds = _as_int(_require(obj, "unixReviewTime", lineno), "unixReviewTime", lineno)

    if not 1 <= rating <= 5:
        raise DataError(f"rating {rating} outside 1..5", lineno)
    if yes < 0 or total < 0:
        raise DataError("negative vote count", lineno)
    if total < yes:
        raise DataError(f"total votes {total} < helpful votes {yes}", lineno)

    review_id = obj.get("reviewID")
    review_id = str(review_id) if review_id is not None else make_review_id(reviewer_id, product_id)
    return Review(
        review_id=review_id,
        reviewer_id=reviewer_id,
        product_id=product_id,
        user_name=name,
        rating=rating,
        upvotes=yes,
        downvotes=total - yes,
        text=text,
        timestamp=seconds // SECONDS_PER_DAY,
    )


def serialize_review(review: Review) -> str:
    """Inverse of :func:`parse_review_record` (one JSON line, no newline)."""
    obj = {
        "reviewID": review.review_id,
        "reviewerID": review.reviewer_id,
        "reviewerName": review.user_name,
        "asin": review.product_id,
        "overall": review.rating,
        "helpful": [review.upvotes, review.upvotes + review.downvotes],
        "reviewText": review.text,
        "unixReviewTime": review.timestamp * SECONDS_PER_DAY,
    }
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def _flatten_categories(value, lineno) -> frozenset[str]:
    out = set()
    if not isinstance(value, list):
        raise ParseError("categories must be a list of paths", lineno)
    for path in value:
        if isinstance(path, str):
            path = [path]
        if not isinstance(path, list):
            raise ParseError("category path must be a list", lineno)
        for name in path:
            if isinstance(name, str) and name.strip():
                out.add(name.strip())
    return frozenset(out)


def parse_product_record(line: str, lineno: int | None = None) -> Product:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", lineno)
    asin = obj.get("asin")
    if not asin:
        raise ParseError("missing field 'asin'", lineno)
    return Product(str(asin), _flatten_categories(obj.get("categories", []), lineno))


def serialize_product(product: Product) -> str:
    cats = [[c] for c in sorted(product.categories)]
    return json.dumps({"asin": product.product_id, "categories": cats}, ensure_ascii=False)


def open_text(path: str | os.PathLike) -> IO[str]:
    """Open a text file, transparently decompressing gzip input."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            magic = fh.read(2)
        if magic == b"\x1f\x8b":
            return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc


@dataclass
class IngestReport:
    review_lines: int = 0
    admitted: int = 0
    skipped: int = 0
    skipped_reasons: dict[str, int] = field(default_factory=dict)
    product_lines: int = 0
    products: int = 0
    products_skipped: int = 0
    duplicate_products: int = 0
    orphan_reviews: int = 0

    def skip(self, reason: str) -> None:
        self.skipped += 1
        self.skipped_reasons[reason] = self.skipped_reasons.get(reason, 0) + 1


class CorpusStore:
    """Reviews and products held in memory with reviewer and category indexes.

    On disk the store is a directory holding an append-only review log
    (``reviews.jsonl``), the product table and a JSON side index.
    """

    def __init__(self, reviews: Iterable[Review] = (), products: Iterable[Product] = ()):
        self.products: dict[str, Product] = {}
        for p in products:
            self.products[p.product_id] = p
        self.reviews: dict[str, Review] = {}
        self.by_reviewer: dict[str, list[str]] = {}
        self.by_category: dict[str, list[str]] = {}
        for r in reviews:
            self.add(r)
        self.report = IngestReport()

    def add(self, review: Review) -> None:
        if review.review_id in self.reviews:
            raise DataError(f"duplicate review_id {review.review_id}")
        self.reviews[review.review_id] = review
        self.by_reviewer.setdefault(review.reviewer_id, []).append(review.review_id)
        product = self.products.get(review.product_id)
        if product is not None:
            for cat in product.categories:
                self.by_category.setdefault(cat, []).append(review.review_id)

    def __len__(self) -> int:
        return len(self.reviews)

    def __iter__(self) -> Iterator[Review]:
        return iter(self.reviews.values())

    def categories_of(self, review: Review) -> frozenset[str]:
        product = self.products.get(review.product_id)
        return product.categories if product is not None else frozenset()

    def in_category(self, category: str) -> list[Review]:
        return [self.reviews[i] for i in self.by_category.get(category, ())]

    # -- persistence -----------------------------------------------------

    def save(self, path: str | os.PathLike) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / REVIEW_FILE, "w", encoding="utf-8") as fh:
            for r in self.reviews.values():
                fh.write(json.dumps(asdict(r), ensure_ascii=False))
                fh.write("\n")
        with open(path / PRODUCT_FILE, "w", encoding="utf-8") as fh:
            for pid in sorted(self.products):
                fh.write(serialize_product(self.products[pid]))
                fh.write("\n")
        index = {
            "by_reviewer": self.by_reviewer,
            "by_category": {k: self.by_category[k] for k in sorted(self.by_category)},
        }
        with open(path / INDEX_FILE, "w", encoding="utf-8") as fh:
            json.dump(index, fh, ensure_ascii=False)
        with open(path / INGEST_FILE, "w", encoding="utf-8") as fh:
            json.dump(asdict(self.report), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "CorpusStore":
        path = Path(path)
        if not (path / REVIEW_FILE).exists():
            raise DataError(f"no corpus store at {path}")
        store = cls()
        with open(path / PRODUCT_FILE, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                p = parse_product_record(line, lineno)
                store.products[p.product_id] = p
        with open(path / REVIEW_FILE, encoding="utf-8") as fh:
            for line in fh:
                r = Review(**json.loads(line))
                store.reviews[r.review_id] = r
        with open(path / INDEX_FILE, encoding="utf-8") as fh:
            index = json.load(fh)
        store.by_reviewer = index["by_reviewer"]
        store.by_category = index["by_category"]
        ingest = path / INGEST_FILE
        if ingest.exists():
            with open(ingest, encoding="utf-8") as fh:
                store.report = IngestReport(**json.load(fh))
        return store


def _lines(stream) -> Iterator[str]:
    if isinstance(stream, (str, os.PathLike)):
        with open_text(stream) as fh:
            yield from fh
    else:
        yield from stream


def ingest_corpus(review_stream, product_stream) -> CorpusStore:
    """Build a store from review and product line streams (or file paths).

    Malformed or incomplete review lines are skipped and counted, so
    ``admitted + skipped`` always equals the number of non-blank review lines.
    Duplicate product records: the last one wins.
    """
    report = IngestReport()
    products: dict[str, Product] = {}
    for lineno, line in enumerate(_lines(product_stream), 1):
        if not line.strip():
            continue
        report.product_lines += 1
        try:
            p = parse_product_record(line, lineno)
        except ParseError:
            report.products_skipped += 1
            continue
        if p.product_id in products:
            report.duplicate_products += 1
        products[p.product_id] = p
    report.products = len(products)

    store = CorpusStore(products=products.values())
    for lineno, line in enumerate(_lines(review_stream), 1):
        if not line.strip():
            continue
        report.review_lines += 1
        try:
            review = parse_review_record(line, lineno)
        except ParseError:
            report.skip("parse")
            continue
        except DataError:
            report.skip("invalid")
            continue
        if review.review_id in store.reviews:
            report.skip("duplicate")
            continue
        store.add(review)
        report.admitted += 1
        if review.product_id not in products:
            report.orphan_reviews += 1
    store.report = report
    return store


def corpus_stats(store: CorpusStore) -> CorpusStats:
    n = len(store)
    stats = CorpusStats(
        review_count=n,
        reviewer_count=len({r.reviewer_id for r in store}),
        product_count=len(store.products),
        category_count=len({c for p in store.products.values() for c in p.categories}),
    )
    if n:
        words = ratings = up = down = 0
        for r in store:
            words += len(r.text.split())
            ratings += r.rating
            up += r.upvotes
            down += r.downvotes
        stats.mean_words_per_review = words / n
        stats.mean_rating = ratings / n
        stats.mean_upvotes = up / n
        stats.mean_downvotes = down / n
    return stats


def review_names(store: CorpusStore) -> dict[str, str]:
    """Representative user name per reviewer: most frequent, ties lexicographic."""
    counts: dict[str, Counter] = {}
    for r in store:
        counts.setdefault(r.reviewer_id, Counter())[r.user_name] += 1
    out = {}
    for rid, c in counts.items():
        out[rid] = min(c.items(), key=lambda kv: (-kv[1], kv[0]))[0]
    return out
