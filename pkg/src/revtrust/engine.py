"""Iterative trust / honesty / reliability scoring.

Three mutually dependent scores are computed over a :class:`Dataset`:

* honesty of a review: how close its normalized score is to the product's
  reliability, relative to the largest deviation possible at that
  reliability;
* trust of a reviewer: honesty of their reviews averaged with weights equal
  to each review's position in the reviewer's history, so recent behaviour
  counts more;
* reliability of a product: mean of its normalized review scores weighted by
  reviewer trust times review honesty.

:func:`solve` repeats :func:`iterate_once` until the largest change of any
score drops below the configured tolerance.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .domain import Dataset, normalize_score

log = logging.getLogger(__name__)

#: used when a reliability or trust average has no weight behind it
FALLBACK = 0.5


class CoverageError(ValueError):
    """A score state does not cover exactly the nodes of a dataset."""


@dataclass(frozen=True)
class ScoreState:
    trust: Mapping[str, float]
    honesty: Mapping[str, float]
    reliability: Mapping[str, float]

    @classmethod
    def uniform(cls, d: Dataset, value: float) -> "ScoreState":
        return cls(
            trust={r.reviewer_id: value for r in d.reviewers},
            honesty={v.review_id: value for v in d.reviews},
            reliability={p.product_id: value for p in d.products},
        )

    def max_abs_diff(self, other: "ScoreState") -> float:
        delta = 0.0
        for mine, theirs in ((self.trust, other.trust), (self.honesty, other.honesty), (self.reliability, other.reliability)):
            for k, v in mine.items():
                delta = max(delta, abs(v - theirs[k]))
        return delta


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-6
    max_iterations: int = 1000
    initial_value: float = 0.5

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 <= self.initial_value <= 1:
            raise ValueError("initial_value must lie in [0, 1]")


@dataclass(frozen=True)
class SolverResult:
    state: ScoreState
    iterations: int
    converged: bool
    final_delta: float


# scalar formulas


def review_honesty(s, r):
    """Honesty of a review with normalized score ``s`` on a product of reliability ``r``.

    The deviation ``|s - r|`` is scaled by ``max(r, 1 - r)``, the largest
    deviation any score could have, and the result is clamped at 0.
    Works with ``Fraction`` inputs.
    """
    width = r if r > 0.5 else (1 - r if r < 0.5 else 0.5)
    h = 1 - abs(s - r) / width
    return max(h, 0 * h)


def reviewer_trust(reviews: Iterable[tuple[int, float]]):
    """Recency-weighted mean honesty over ``(seq, honesty)`` pairs."""
    reviews = list(reviews)
    if not reviews:
        return FALLBACK
    num = sum(seq * h for seq, h in reviews)
    den = sum(seq for seq, _ in reviews)
    return num / den


def product_reliability(entries: Iterable[tuple[float, float, float]]):
    """Mean of normalized scores weighted by ``trust * honesty``.

    ``entries`` holds ``(trust, honesty, score)`` triples. Returns
    :data:`FALLBACK` when the total weight is zero.
    """
    weighted = [(t * h, s) for t, h, s in entries]
    top = max((w for w, _ in weighted), default=0)
    if top == 0:
        return FALLBACK
    if isinstance(top, float):
        # rescale so a subnormal weight cannot underflow w * s to zero
        weighted = [(w / top, s) for w, s in weighted]
    return sum(w * s for w, s in weighted) / sum(w for w, _ in weighted)


# vectorised passes


class _Graph:
    """Dense index arrays for a dataset in canonical (id-sorted) order.

    Sorting by id fixes the floating-point summation order, so results do not
    depend on how the dataset's collections happen to be ordered.
    """

    def __init__(self, d: Dataset):
        self.reviewer_ids = sorted(r.reviewer_id for r in d.reviewers)
        self.product_ids = sorted(p.product_id for p in d.products)
        reviews = sorted(d.reviews, key=lambda v: v.review_id)
        self.review_ids = [v.review_id for v in reviews]
        r_index = {k: i for i, k in enumerate(self.reviewer_ids)}
        p_index = {k: i for i, k in enumerate(self.product_ids)}
        self.reviewer = np.array([r_index[v.reviewer_id] for v in reviews], dtype=np.intp)
        self.product = np.array([p_index[v.product_id] for v in reviews], dtype=np.intp)
        self.score = np.array([normalize_score(v.score) for v in reviews], dtype=float)
        self.seq = np.array([v.seq for v in reviews], dtype=float)
        self.seq_total = np.bincount(self.reviewer, weights=self.seq, minlength=len(self.reviewer_ids))

    def vectors(self, state: ScoreState):
        try:
            trust = np.array([state.trust[k] for k in self.reviewer_ids], dtype=float)
            honesty = np.array([state.honesty[k] for k in self.review_ids], dtype=float)
            reliability = np.array([state.reliability[k] for k in self.product_ids], dtype=float)
        except KeyError as exc:
            raise CoverageError(f"score state has no entry for {exc.args[0]!r}") from None
        if len(state.trust) != len(trust) or len(state.honesty) != len(honesty) or len(state.reliability) != len(reliability):
            raise CoverageError("score state has entries for nodes outside the dataset")
        return trust, honesty, reliability

    def state(self, trust, honesty, reliability) -> ScoreState:
        return ScoreState(
            trust=dict(zip(self.reviewer_ids, trust.tolist())),
            honesty=dict(zip(self.review_ids, honesty.tolist())),
            reliability=dict(zip(self.product_ids, reliability.tolist())),
        )

    def step(self, reliability: np.ndarray):
        r = reliability[self.product]
        width = np.maximum(r, 1.0 - r)
        honesty = np.clip(1.0 - np.abs(self.score - r) / width, 0.0, 1.0)

        num = np.bincount(self.reviewer, weights=self.seq * honesty, minlength=len(self.reviewer_ids))
        trust = np.full(len(self.reviewer_ids), FALLBACK)
        has = self.seq_total > 0
        trust[has] = num[has] / self.seq_total[has]

        w = trust[self.reviewer] * honesty
        top = np.zeros(len(self.product_ids))
        np.maximum.at(top, self.product, w)
        scale = top[self.product]
        w = np.divide(w, scale, out=np.zeros_like(w), where=scale > 0)
        num = np.bincount(self.product, weights=w * self.score, minlength=len(self.product_ids))
        den = np.bincount(self.product, weights=w, minlength=len(self.product_ids))
        new_rel = np.full(len(self.product_ids), FALLBACK)
        has = den > 0
        new_rel[has] = np.clip(num[has] / den[has], 0.0, 1.0)
        return trust, honesty, new_rel


def _max_delta(*pairs) -> float:
    return max((float(np.max(np.abs(a - b))) for a, b in pairs if len(a)), default=0.0)


def iterate_once(d: Dataset, prev: ScoreState) -> ScoreState:
    """One update pass: honesty from the previous reliabilities, then trust,
    then reliability from the fresh trust and honesty values."""
    g = _Graph(d)
    _, _, reliability = g.vectors(prev)
    return g.state(*g.step(reliability))


def solve(d: Dataset, cfg: Optional[SolverConfig] = None) -> SolverResult:
    cfg = cfg or SolverConfig()
    g = _Graph(d)
    n_t, n_h, n_r = len(g.reviewer_ids), len(g.review_ids), len(g.product_ids)
    trust = np.full(n_t, cfg.initial_value)
    honesty = np.full(n_h, cfg.initial_value)
    reliability = np.full(n_r, cfg.initial_value)
    delta = float("inf")
    for it in range(1, cfg.max_iterations + 1):
        new_t, new_h, new_r = g.step(reliability)
        delta = _max_delta((new_t, trust), (new_h, honesty), (new_r, reliability))
        trust, honesty, reliability = new_t, new_h, new_r
        if delta <= cfg.tolerance:
            return SolverResult(g.state(trust, honesty, reliability), it, True, delta)
    log.warning("no convergence after %d iterations (last change %.3g)", cfg.max_iterations, delta)
    return SolverResult(g.state(trust, honesty, reliability), cfg.max_iterations, False, delta)


# export


def dumps_scores(result: SolverResult, cfg: SolverConfig, format: str = "jsonl") -> str:
    """Serialise a solver result as ``kind,id,value`` records plus run metadata."""
    meta = {
        "iterations": result.iterations,
        "converged": result.converged,
        "final_delta": result.final_delta,
        "tolerance": cfg.tolerance,
        "max_iterations": cfg.max_iterations,
        "initial_value": cfg.initial_value,
    }
    st = result.state
    records = [
        (kind, k, values[k])
        for kind, values in (("trust", st.trust), ("honesty", st.honesty), ("reliability", st.reliability))
        for k in sorted(values)
    ]
    if format == "jsonl":
        lines = [json.dumps({"meta": meta})]
        lines += [json.dumps({"kind": kind, "id": k, "value": v}) for kind, k, v in records]
        return "".join(line + "\n" for line in lines)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "id", "value"])
        for key, value in meta.items():
            w.writerow(["meta", key, json.dumps(value)])
        for kind, k, v in records:
            w.writerow([kind, k, repr(v)])
        return buf.getvalue()
    raise ValueError(f"unknown score format {format!r}")


def loads_scores(text: str, format: str = "jsonl") -> tuple[ScoreState, dict]:
    """Inverse of :func:`dumps_scores`; returns the state and the metadata dict."""
    maps = {"trust": {}, "honesty": {}, "reliability": {}}
    meta = {}
    if format == "jsonl":
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "meta" in rec:
                meta.update(rec["meta"])
            elif rec.get("kind") in maps:
                maps[rec["kind"]][str(rec["id"])] = float(rec["value"])
            else:
                raise ValueError(f"line {n}: unrecognised score record")
    elif format == "csv":
        reader = csv.reader(io.StringIO(text))
        next(reader, None)
        for kind, k, value in reader:
            if kind == "meta":
                meta[k] = json.loads(value)
            elif kind in maps:
                maps[kind][k] = float(value)
            else:
                raise ValueError(f"line {reader.line_num}: unknown kind {kind!r}")
    else:
        raise ValueError(f"unknown score format {format!r}")
    return ScoreState(**maps), meta


def load_scores(path, format: Optional[str] = None) -> tuple[ScoreState, dict]:
    format = format or ("csv" if Path(path).suffix.lower() == ".csv" else "jsonl")
    return loads_scores(Path(path).read_text(encoding="utf-8"), format)
