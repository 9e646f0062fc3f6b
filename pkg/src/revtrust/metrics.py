"""Evaluation of a score state against ground-truth labels.

This is the only module that reads the ``is_spam`` / ``is_spammer`` labels.
Unlabeled reviews and reviewers count as honest, but a dataset with no labels
at all is rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .domain import Dataset
from .engine import CoverageError, ScoreState, SolverConfig, solve


class MissingLabelsError(ValueError):
    pass


ROW_NAMES = (
    ("avg_trust_honest", "The average trustworthiness rating of honest reviewers"),
    ("avg_trust_spammer", "The average trustworthiness rating of spam attackers"),
    ("avg_honesty_nonspam", "The average honesty score of non-spam reviews"),
    ("avg_honesty_spam", "The average honesty score of spam reviews"),
    ("reliability_before", "The average reliability of target products before spammer"),
    ("reliability_after", "The average reliability of target products after spammer"),
    ("deviation", "Deviation value in product reliability"),
)


@dataclass(frozen=True)
class EvaluationReport:
    avg_trust_honest: float
    avg_trust_spammer: float
    avg_honesty_nonspam: float
    avg_honesty_spam: float
    reliability_before: float
    reliability_after: float
    deviation: float
    target_products: tuple[str, ...] = ()


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    flagged: int
    positives: int


@dataclass(frozen=True)
class DetectionReport:
    threshold: float
    reviews: PRF
    reviewers: PRF


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values) if values else math.nan


def _require_labels(d: Dataset):
    labeled = any(v.is_spam_label is not None for v in d.reviews) or any(
        r.is_spammer_label is not None for r in d.reviewers
    )
    if not labeled:
        raise MissingLabelsError("dataset carries no spam/spammer labels; evaluation needs ground truth")


def _require_coverage(d: Dataset, state: ScoreState):
    for name, ids, values in (
        ("trust", {r.reviewer_id for r in d.reviewers}, state.trust),
        ("honesty", {v.review_id for v in d.reviews}, state.honesty),
        ("reliability", {p.product_id for p in d.products}, state.reliability),
    ):
        if set(values) != ids:
            raise CoverageError(f"{name} scores do not match the dataset's nodes")


def spam_review_ids(d: Dataset) -> list[str]:
    return sorted(v.review_id for v in d.reviews if v.is_spam_label)


def spammer_ids(d: Dataset) -> list[str]:
    return sorted(r.reviewer_id for r in d.reviewers if r.is_spammer_label)


def target_products(d: Dataset) -> list[str]:
    """Products that received at least one spam review."""
    return sorted({v.product_id for v in d.reviews if v.is_spam_label})


def evaluate(d: Dataset, state: ScoreState, cfg: Optional[SolverConfig] = None) -> EvaluationReport:
    """The seven summary rows for one run.

    ``reliability_before`` re-solves the dataset with every spam-labeled
    review removed; ``deviation`` is the mean absolute shift of the target
    products' reliability between that run and ``state``.
    """
    _require_labels(d)
    _require_coverage(d, state)
    spammers = set(spammer_ids(d))
    spam = set(spam_review_ids(d))
    trust_h = [state.trust[r.reviewer_id] for r in d.reviewers if r.reviewer_id not in spammers]
    trust_s = [state.trust[r] for r in sorted(spammers)]
    hon_n = [state.honesty[v.review_id] for v in sorted(d.reviews, key=lambda v: v.review_id) if v.review_id not in spam]
    hon_s = [state.honesty[v] for v in sorted(spam)]

    targets = target_products(d)
    if targets:
        before_state = solve(d.without_reviews(spam), cfg).state
        before = [before_state.reliability[p] for p in targets]
        after = [state.reliability[p] for p in targets]
        deviation = _mean(abs(a - b) for a, b in zip(after, before))
        rel_before, rel_after = _mean(before), _mean(after)
    else:
        deviation = 0.0
        rel_before = rel_after = math.nan

    return EvaluationReport(
        avg_trust_honest=_mean(sorted(trust_h)),
        avg_trust_spammer=_mean(trust_s),
        avg_honesty_nonspam=_mean(sorted(hon_n)),
        avg_honesty_spam=_mean(hon_s),
        reliability_before=rel_before,
        reliability_after=rel_after,
        deviation=deviation,
        target_products=tuple(targets),
    )


def _prf(flagged: set, truth: set) -> PRF:
    tp = len(flagged & truth)
    precision = tp / len(flagged) if flagged else 1.0
    recall = tp / len(truth) if truth else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PRF(precision, recall, f1, len(flagged), len(truth))


def detect(d: Dataset, state: ScoreState, threshold: float = 0.5) -> DetectionReport:
    """Flag reviews with honesty below ``threshold`` and reviewers with trust below it."""
    _require_labels(d)
    _require_coverage(d, state)
    flagged_reviews = {k for k, h in state.honesty.items() if h < threshold}
    flagged_reviewers = {k for k, t in state.trust.items() if t < threshold}
    return DetectionReport(
        threshold=threshold,
        reviews=_prf(flagged_reviews, set(spam_review_ids(d))),
        reviewers=_prf(flagged_reviewers, set(spammer_ids(d))),
    )


def format_table(report: EvaluationReport, detection: Optional[DetectionReport] = None, title: str = "") -> str:
    width = max(len(label) for _, label in ROW_NAMES)
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'Item':<{width}}  Value")
    lines.append("-" * (width + 9))
    for key, label in ROW_NAMES:
        value = getattr(report, key)
        lines.append(f"{label:<{width}}  {value:.4f}")
    if detection is not None:
        lines.append("")
        lines.append(f"Detection at threshold {detection.threshold:g}")
        for name, prf in (("spam reviews", detection.reviews), ("spammers", detection.reviewers)):
            lines.append(
                f"  {name:<13} precision {prf.precision:.4f}  recall {prf.recall:.4f}  f1 {prf.f1:.4f}"
                f"  ({prf.flagged} flagged, {prf.positives} labeled)"
            )
    return "\n".join(lines) + "\n"


def _json_safe(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def report_json(report: EvaluationReport, detection: Optional[DetectionReport] = None) -> str:
    data = {"evaluation": asdict(report)}
    if detection is not None:
        data["detection"] = asdict(detection)
    return json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n"
