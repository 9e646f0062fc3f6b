"""Reviewer/review/product graph and its on-disk formats.

A dataset is a tripartite graph: reviewers write reviews, each review scores
one product. Scores live on a 0-5 star scale; the engine works on scores
normalized to [0, 1].

Two file formats are supported:

* CSV with header ``reviewer_id,product_id,score[,seq][,is_spam]``. The
  optional columns ``review_id`` and ``is_spammer`` are also understood.
* JSONL with one review object per line, plus optional header records
  ``{"product": id, "quality": q}`` and ``{"reviewer": id, "spammer": b}``.

JSONL is lossless. CSV cannot carry product qualities or reviewers/products
that have no reviews.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

MAX_SCORE = 5

CSV_COLUMNS = ("review_id", "reviewer_id", "product_id", "score", "seq", "is_spam", "is_spammer")


class DatasetError(Exception):
    """Base class for dataset problems."""


class DatasetParseError(DatasetError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrityError(DatasetError):
    """A dataset invariant (references, seq numbering, ids) is violated."""


@dataclass(frozen=True)
class Review:
    review_id: str
    reviewer_id: str
    product_id: str
    score: float
    seq: int
    is_spam_label: Optional[bool] = None


@dataclass(frozen=True)
class Reviewer:
    reviewer_id: str
    is_spammer_label: Optional[bool] = None


@dataclass(frozen=True)
class Product:
    product_id: str
    true_quality: Optional[float] = None


def normalize_score(score: float) -> float:
    """Map a raw 0-5 star score onto [0, 1]."""
    if not 0 <= score <= MAX_SCORE:
        raise ValueError(f"score {score!r} outside [0, {MAX_SCORE:g}]")
    return score / MAX_SCORE


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of products, reviewers and reviews.

    Construction validates referential integrity and per-reviewer ``seq``
    numbering (1..n, no gaps or duplicates).
    """

    products: tuple[Product, ...] = ()
    reviewers: tuple[Reviewer, ...] = ()
    reviews: tuple[Review, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "products", tuple(self.products))
        object.__setattr__(self, "reviewers", tuple(self.reviewers))
        object.__setattr__(self, "reviews", tuple(self.reviews))
        self._validate()

    def _validate(self):
        product_ids = [p.product_id for p in self.products]
        reviewer_ids = [r.reviewer_id for r in self.reviewers]
        review_ids = [v.review_id for v in self.reviews]
        for kind, ids in (("product", product_ids), ("reviewer", reviewer_ids), ("review", review_ids)):
            if len(set(ids)) != len(ids):
                dup = _first_duplicate(ids)
                raise IntegrityError(f"duplicate {kind} id {dup!r}")
        products = set(product_ids)
        reviewers = set(reviewer_ids)
        seqs = defaultdict(list)
        for v in self.reviews:
            if v.reviewer_id not in reviewers:
                raise IntegrityError(f"review {v.review_id!r} references unknown reviewer {v.reviewer_id!r}")
            if v.product_id not in products:
                raise IntegrityError(f"review {v.review_id!r} references unknown product {v.product_id!r}")
            if not 0 <= v.score <= MAX_SCORE:
                raise IntegrityError(f"review {v.review_id!r} has score {v.score!r} outside [0, 5]")
            seqs[v.reviewer_id].append(v.seq)
        for reviewer_id, values in seqs.items():
            if sorted(values) != list(range(1, len(values) + 1)):
                dup = _first_duplicate(values)
                detail = f"duplicate seq {dup}" if dup is not None else f"seq values {sorted(values)} are not 1..{len(values)}"
                raise IntegrityError(f"reviewer {reviewer_id!r}: {detail}")

    # adjacency

    @cached_property
    def _by_reviewer(self) -> dict[str, tuple[Review, ...]]:
        out = {r.reviewer_id: [] for r in self.reviewers}
        for v in self.reviews:
            out[v.reviewer_id].append(v)
        return {k: tuple(sorted(vs, key=lambda v: v.seq)) for k, vs in out.items()}

    @cached_property
    def _by_product(self) -> dict[str, tuple[Review, ...]]:
        out = {p.product_id: [] for p in self.products}
        for v in self.reviews:
            out[v.product_id].append(v)
        return {k: tuple(vs) for k, vs in out.items()}

    def reviews_of_reviewer(self, reviewer_id: str) -> tuple[Review, ...]:
        """Reviews written by ``reviewer_id``, oldest first."""
        return self._by_reviewer[reviewer_id]

    def reviews_of_product(self, product_id: str) -> tuple[Review, ...]:
        return self._by_product[product_id]

    def reviews_of_product_by_reviewer(self, product_id: str, reviewer_id: str) -> tuple[Review, ...]:
        return tuple(v for v in self._by_product[product_id] if v.reviewer_id == reviewer_id)

    def reviewers_of_product(self, product_id: str) -> tuple[str, ...]:
        return tuple(dict.fromkeys(v.reviewer_id for v in self._by_product[product_id]))

    def product(self, product_id: str) -> Product:
        return self._products_by_id[product_id]

    def reviewer(self, reviewer_id: str) -> Reviewer:
        return self._reviewers_by_id[reviewer_id]

    @cached_property
    def _products_by_id(self) -> dict[str, Product]:
        return {p.product_id: p for p in self.products}

    @cached_property
    def _reviewers_by_id(self) -> dict[str, Reviewer]:
        return {r.reviewer_id: r for r in self.reviewers}

    def __len__(self):
        return len(self.reviews)

    def canonical(self) -> "Dataset":
        """The same dataset with every collection sorted by id."""
        return Dataset(
            products=sorted(self.products, key=lambda p: p.product_id),
            reviewers=sorted(self.reviewers, key=lambda r: r.reviewer_id),
            reviews=sorted(self.reviews, key=lambda v: v.review_id),
        )

    def same_content(self, other: "Dataset") -> bool:
        """Equality up to collection order."""
        return self.canonical() == other.canonical()

    def without_reviews(self, review_ids: Iterable[str]) -> "Dataset":
        """Drop reviews and renumber the remaining ones per reviewer.

        Relative order of each reviewer's reviews is preserved.
        """
        drop = set(review_ids)
        kept = [v for v in self.reviews if v.review_id not in drop]
        order = sorted(kept, key=lambda v: (v.reviewer_id, v.seq))
        new_seq = {}
        counter = defaultdict(int)
        for v in order:
            counter[v.reviewer_id] += 1
            new_seq[v.review_id] = counter[v.reviewer_id]
        return Dataset(
            products=self.products,
            reviewers=self.reviewers,
            reviews=[replace(v, seq=new_seq[v.review_id]) for v in kept],
        )


def _first_duplicate(values):
    seen = set()
    for v in values:
        if v in seen:
            return v
        seen.add(v)
    return None


# builders


def build_dataset(rows: Iterable[dict], products: Iterable[Product] = (), reviewers: Iterable[Reviewer] = ()) -> Dataset:
    """Assemble a dataset from loose review records.

    Each row needs ``reviewer_id``, ``product_id`` and ``score``; ``review_id``,
    ``seq`` and the label keys are optional. Missing ``seq`` values are assigned
    from row order per reviewer, missing ids as ``v<row index>``. Products and
    reviewers that are only referenced by rows are created on the fly.
    """
    rows = list(rows)
    product_map = {p.product_id: p for p in products}
    reviewer_map = {r.reviewer_id: r for r in reviewers}
    counter = defaultdict(int)
    explicit = any(row.get("seq") is not None for row in rows)
    if explicit and not all(row.get("seq") is not None for row in rows):
        raise IntegrityError("seq must be given for every review or for none")
    reviews = []
    for i, row in enumerate(rows):
        reviewer_id = str(row["reviewer_id"])
        product_id = str(row["product_id"])
        reviewer_map.setdefault(reviewer_id, Reviewer(reviewer_id, row.get("is_spammer")))
        product_map.setdefault(product_id, Product(product_id))
        counter[reviewer_id] += 1
        seq = int(row["seq"]) if explicit else counter[reviewer_id]
        review_id = row.get("review_id")
        reviews.append(
            Review(
                review_id=str(review_id) if review_id is not None else f"v{i}",
                reviewer_id=reviewer_id,
                product_id=product_id,
                score=float(row["score"]),
                seq=seq,
                is_spam_label=row.get("is_spam"),
            )
        )
    return Dataset(products=tuple(product_map.values()), reviewers=tuple(reviewer_map.values()), reviews=reviews)


# file I/O


def _parse_bool(text: str, line: int, column: str) -> Optional[bool]:
    t = text.strip().lower()
    if t == "":
        return None
    if t in ("1", "true", "yes", "t", "y"):
        return True
    if t in ("0", "false", "no", "f", "n"):
        return False
    raise DatasetParseError(f"bad boolean {text!r} in column {column}", line)


def _parse_score(value, line: int) -> float:
    try:
        score = float(value)
    except (TypeError, ValueError):
        raise DatasetParseError(f"bad score {value!r}", line) from None
    if not 0 <= score <= MAX_SCORE:
        raise DatasetParseError(f"score {score!r} outside [0, 5]", line)
    return score


def _parse_seq(value, line: int) -> int:
    try:
        seq = int(value)
    except (TypeError, ValueError):
        raise DatasetParseError(f"bad seq {value!r}", line) from None
    if seq < 1 or (isinstance(value, float) and value != seq):
        raise DatasetParseError(f"seq must be a positive integer, got {value!r}", line)
    return seq


def _read_csv(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return Dataset()
    header = [h.strip() for h in header]
    required = {"reviewer_id", "product_id", "score"}
    missing = required - set(header)
    if missing:
        raise DatasetParseError(f"missing column(s) {', '.join(sorted(missing))}", 1)
    unknown = set(header) - set(CSV_COLUMNS)
    if unknown:
        raise DatasetParseError(f"unknown column(s) {', '.join(sorted(unknown))}", 1)
    rows = []
    for raw in reader:
        line = reader.line_num
        if not raw or all(not c.strip() for c in raw):
            continue
        if len(raw) != len(header):
            raise DatasetParseError(f"expected {len(header)} fields, got {len(raw)}", line)
        rec = dict(zip(header, (c.strip() for c in raw)))
        row = {
            "reviewer_id": rec["reviewer_id"],
            "product_id": rec["product_id"],
            "score": _parse_score(rec["score"], line),
        }
        if not row["reviewer_id"] or not row["product_id"]:
            raise DatasetParseError("empty reviewer_id or product_id", line)
        if rec.get("seq"):
            row["seq"] = _parse_seq(rec["seq"], line)
        if rec.get("review_id"):
            row["review_id"] = rec["review_id"]
        if "is_spam" in rec:
            row["is_spam"] = _parse_bool(rec["is_spam"], line, "is_spam")
        if "is_spammer" in rec:
            row["is_spammer"] = _parse_bool(rec["is_spammer"], line, "is_spammer")
        rows.append(row)
    return build_dataset(rows)


def _read_jsonl(text: str) -> Dataset:
    products, reviewers, rows = [], [], []
    for line, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DatasetParseError(f"invalid JSON: {exc.msg}", line) from None
        if not isinstance(rec, dict):
            raise DatasetParseError("expected a JSON object", line)
        if "product" in rec:
            quality = rec.get("quality")
            if quality is not None:
                quality = _parse_score(quality, line)
            products.append(Product(str(rec["product"]), quality))
        elif "reviewer" in rec:
            reviewers.append(Reviewer(str(rec["reviewer"]), rec.get("spammer")))
        else:
            for key in ("reviewer_id", "product_id", "score"):
                if key not in rec:
                    raise DatasetParseError(f"review record missing {key!r}", line)
            row = {
                "reviewer_id": rec["reviewer_id"],
                "product_id": rec["product_id"],
                "score": _parse_score(rec["score"], line),
                "review_id": rec.get("review_id"),
                "is_spam": rec.get("is_spam"),
            }
            if rec.get("seq") is not None:
                row["seq"] = _parse_seq(rec["seq"], line)
            rows.append(row)
    return build_dataset(rows, products=products, reviewers=reviewers)


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".json", ".ndjson"):
        return "jsonl"
    raise ValueError(f"cannot infer dataset format from {str(path)!r}; use .csv or .jsonl")


def load_dataset(path, format: Optional[str] = None) -> Dataset:
    """Read a dataset from ``path`` (format inferred from the suffix if omitted)."""
    format = format or infer_format(path)
    text = Path(path).read_text(encoding="utf-8")
    if format == "csv":
        return _read_csv(text)
    if format == "jsonl":
        return _read_jsonl(text)
    raise ValueError(f"unknown dataset format {format!r}")


def dumps_dataset(d: Dataset, format: str) -> str:
    if format == "jsonl":
        lines = []
        for p in d.products:
            lines.append(json.dumps({"product": p.product_id, "quality": p.true_quality}))
        for r in d.reviewers:
            lines.append(json.dumps({"reviewer": r.reviewer_id, "spammer": r.is_spammer_label}))
        for v in d.reviews:
            lines.append(
                json.dumps(
                    {
                        "review_id": v.review_id,
                        "reviewer_id": v.reviewer_id,
                        "product_id": v.product_id,
                        "score": v.score,
                        "seq": v.seq,
                        "is_spam": v.is_spam_label,
                    }
                )
            )
        return "".join(line + "\n" for line in lines)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for v in d.reviews:
            spammer = d.reviewer(v.reviewer_id).is_spammer_label
            writer.writerow(
                [v.review_id, v.reviewer_id, v.product_id, repr(v.score), v.seq, _fmt_bool(v.is_spam_label), _fmt_bool(spammer)]
            )
        return buf.getvalue()
    raise ValueError(f"unknown dataset format {format!r}")


def _fmt_bool(b: Optional[bool]) -> str:
    return "" if b is None else ("true" if b else "false")


def save_dataset(d: Dataset, path, format: Optional[str] = None) -> None:
    format = format or infer_format(path)
    text = dumps_dataset(d, format)
    Path(path).write_text(text, encoding="utf-8")
