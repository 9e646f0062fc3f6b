"""Trust, honesty and reliability scoring for review graphs under spam attacks."""

__version__ = "0.1.0"

from .domain import Dataset, Product, Review, Reviewer, load_dataset, normalize_score, save_dataset
from .engine import (
    ScoreState,
    SolverConfig,
    SolverResult,
    iterate_once,
    product_reliability,
    review_honesty,
    reviewer_trust,
    solve,
)
from .metrics import DetectionReport, EvaluationReport, detect, evaluate
from .simulator import AttackScript, HonestPolicy, ScenarioConfig, gen_honest_score, inject_attacker, run_scenario

__all__ = [
    "AttackScript",
    "Dataset",
    "DetectionReport",
    "EvaluationReport",
    "HonestPolicy",
    "Product",
    "Review",
    "Reviewer",
    "ScenarioConfig",
    "ScoreState",
    "SolverConfig",
    "SolverResult",
    "detect",
    "evaluate",
    "gen_honest_score",
    "inject_attacker",
    "iterate_once",
    "load_dataset",
    "normalize_score",
    "product_reliability",
    "review_honesty",
    "reviewer_trust",
    "run_scenario",
    "save_dataset",
    "solve",
]
