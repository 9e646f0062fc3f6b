"""Seeded review-stream simulation and attacker injection.

Honest reviewers score a product by drawing from a normal distribution
centred on its quality. Spammers follow an :class:`AttackScript`:

``simple``
    attack score on every target, nothing else.
``over_product``
    attack score on targets, honest scores on the other products they review.
``over_time``
    alternate blocks of ``block_length`` honest and attacking reviews on the
    targets, counted along the spammer's own review history.

Reviews are emitted round-robin over the reviewer-product connections, so
per-reviewer ``seq`` numbers are reproducible from the config alone.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .domain import MAX_SCORE, Dataset, Product, Review, Reviewer

SCHEMA_VERSION = 1
ATTACK_KINDS = ("simple", "over_product", "over_time")


class ConfigError(ValueError):
    pass


class TargetNotFoundError(KeyError):
    def __str__(self):
        return f"target product(s) not found: {', '.join(self.args[0])}"


@dataclass(frozen=True)
class HonestPolicy:
    variance: float = 0.5

    def __post_init__(self):
        if self.variance < 0:
            raise ConfigError("variance must be non-negative")


@dataclass(frozen=True)
class AttackScript:
    kind: str
    target_products: tuple[str, ...]
    attack_score: float
    honest_elsewhere: bool = True
    block_length: Optional[int] = None
    # fixed score for over_time honest blocks; drawn from the honest policy if None
    honest_score: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "target_products", tuple(self.target_products))
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown attack kind {self.kind!r}; expected one of {', '.join(ATTACK_KINDS)}")
        if not self.target_products:
            raise ConfigError("attack script needs at least one target product")
        if not 0 <= self.attack_score <= MAX_SCORE:
            raise ConfigError(f"attack_score {self.attack_score!r} outside [0, 5]")
        if self.kind == "over_time" and (self.block_length is None or self.block_length < 1):
            raise ConfigError("over_time attacks need block_length >= 1")
        if self.honest_score is not None and not 0 <= self.honest_score <= MAX_SCORE:
            raise ConfigError(f"honest_score {self.honest_score!r} outside [0, 5]")

    def attacks(self, product_id: str, seq: int) -> bool:
        """Whether the spammer's review number ``seq`` on ``product_id`` is an attack."""
        if product_id not in self.target_products:
            return not self.honest_elsewhere
        if self.kind == "over_time":
            return math.ceil(seq / self.block_length) % 2 == 0
        return True


@dataclass(frozen=True)
class ReviewerSpec:
    reviewer_id: str
    products: tuple[str, ...]
    script: Optional[AttackScript] = None

    def __post_init__(self):
        object.__setattr__(self, "products", tuple(self.products))


@dataclass(frozen=True)
class InjectionSpec:
    """Attacker appended after generation, aimed at products whose mean
    score is closest to ``target_mean``."""

    attacker_id: str
    kind: str
    attack_score: float
    n_reviews: int
    n_targets: int
    target_mean: float
    min_reviews: int = 3
    honest_elsewhere: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    products: tuple[tuple[str, float], ...]
    honest_reviewers: tuple[ReviewerSpec, ...]
    spammers: tuple[ReviewerSpec, ...] = ()
    total_reviews: int = 1000
    seed: int = 0
    honest_policy: HonestPolicy = field(default_factory=HonestPolicy)
    injection: Optional[InjectionSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "products", tuple((str(p), float(q)) for p, q in self.products))
        object.__setattr__(self, "honest_reviewers", tuple(self.honest_reviewers))
        object.__setattr__(self, "spammers", tuple(self.spammers))
        self.validate()

    def validate(self):
        if self.total_reviews < 1:
            raise ConfigError("total_reviews must be at least 1")
        ids = [p for p, _ in self.products]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate product id")
        for p, q in self.products:
            if not 0 <= q <= MAX_SCORE:
                raise ConfigError(f"product {p!r} quality {q!r} outside [0, 5]")
        known = set(ids)
        reviewer_ids = [r.reviewer_id for r in (*self.honest_reviewers, *self.spammers)]
        if len(set(reviewer_ids)) != len(reviewer_ids):
            raise ConfigError("duplicate reviewer id")
        for r in self.honest_reviewers:
            if r.script is not None:
                raise ConfigError(f"honest reviewer {r.reviewer_id!r} has an attack script")
        for r in self.spammers:
            if r.script is None:
                raise ConfigError(f"spammer {r.reviewer_id!r} has no attack script")
            bad = set(r.script.target_products) - known
            if bad:
                raise ConfigError(f"spammer {r.reviewer_id!r} targets unknown product(s) {sorted(bad)}")
        for r in (*self.honest_reviewers, *self.spammers):
            bad = set(r.products) - known
            if bad:
                raise ConfigError(f"reviewer {r.reviewer_id!r} connected to unknown product(s) {sorted(bad)}")
        if not any(r.products for r in (*self.honest_reviewers, *self.spammers)):
            raise ConfigError("no reviewer-product connections")
        if self.injection is not None:
            inj = self.injection
            if inj.kind not in ("simple", "over_product"):
                raise ConfigError(f"injection kind must be simple or over_product, got {inj.kind!r}")
            if inj.attacker_id in reviewer_ids:
                raise ConfigError(f"injected attacker id {inj.attacker_id!r} already in use")
            if inj.n_targets < 1 or inj.n_reviews < 0:
                raise ConfigError("injection needs n_targets >= 1 and n_reviews >= 0")

    @property
    def connections(self) -> list[tuple[ReviewerSpec, str]]:
        return [(r, p) for r in (*self.honest_reviewers, *self.spammers) for p in r.products]

    # JSON

    def to_dict(self) -> dict:
        def reviewer(r: ReviewerSpec):
            out = {"id": r.reviewer_id, "products": list(r.products)}
            if r.script is not None:
                s = asdict(r.script)
                s["target_products"] = list(s["target_products"])
                out["script"] = s
            return out

        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "total_reviews": self.total_reviews,
            "honest_policy": asdict(self.honest_policy),
            "products": [{"id": p, "quality": q} for p, q in self.products],
            "honest_reviewers": [reviewer(r) for r in self.honest_reviewers],
            "spammers": [reviewer(r) for r in self.spammers],
            "injection": asdict(self.injection) if self.injection else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("scenario config must be a JSON object")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        try:

            def reviewer(rec, spammer):
                script = None
                if spammer:
                    script = AttackScript(**rec["script"])
                return ReviewerSpec(str(rec["id"]), tuple(str(p) for p in rec["products"]), script)

            injection = data.get("injection")
            return cls(
                name=data.get("name", "custom"),
                products=[(rec["id"], rec["quality"]) for rec in data["products"]],
                honest_reviewers=[reviewer(r, False) for r in data.get("honest_reviewers", [])],
                spammers=[reviewer(r, True) for r in data.get("spammers", [])],
                total_reviews=int(data.get("total_reviews", 1000)),
                seed=int(data.get("seed", 0)),
                honest_policy=HonestPolicy(**data.get("honest_policy", {})),
                injection=InjectionSpec(**injection) if injection else None,
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed scenario config: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def load_config(path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return ScenarioConfig.from_dict(data)


# generation


def gen_honest_score(quality: float, policy: HonestPolicy, rng: np.random.Generator) -> float:
    """Draw an honest raw score around ``quality``, clamped to [0, 5]."""
    draw = rng.normal(quality, math.sqrt(policy.variance))
    return float(min(max(draw, 0.0), MAX_SCORE))


def run_scenario(cfg: ScenarioConfig) -> Dataset:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    quality = dict(cfg.products)
    connections = cfg.connections
    seq = {}
    reviews = []
    for i in range(cfg.total_reviews):
        spec, product_id = connections[i % len(connections)]
        k = seq.get(spec.reviewer_id, 0) + 1
        seq[spec.reviewer_id] = k
        script = spec.script
        if script is None:
            score, spam = gen_honest_score(quality[product_id], cfg.honest_policy, rng), False
        elif script.attacks(product_id, k):
            score, spam = script.attack_score, True
        elif script.honest_score is not None and product_id in script.target_products:
            score, spam = script.honest_score, False
        else:
            score, spam = gen_honest_score(quality[product_id], cfg.honest_policy, rng), False
        reviews.append(Review(f"v{i:06d}", spec.reviewer_id, product_id, score, k, spam))

    reviewers = [Reviewer(r.reviewer_id, False) for r in cfg.honest_reviewers]
    reviewers += [Reviewer(r.reviewer_id, True) for r in cfg.spammers]
    d = Dataset(
        products=[Product(p, q) for p, q in cfg.products],
        reviewers=reviewers,
        reviews=reviews,
    )
    if cfg.injection is not None:
        inj = cfg.injection
        targets = select_targets(d, inj.n_targets, inj.target_mean, inj.min_reviews)
        script = AttackScript(inj.kind, targets, inj.attack_score, inj.honest_elsewhere)
        d = inject_attacker(d, script, inj.n_reviews, rng, attacker_id=inj.attacker_id, policy=cfg.honest_policy)
    return d


def mean_scores(d: Dataset) -> dict[str, float]:
    """Mean raw score per product (products without reviews are omitted)."""
    out = {}
    for p in d.products:
        vs = d.reviews_of_product(p.product_id)
        if vs:
            out[p.product_id] = math.fsum(v.score for v in vs) / len(vs)
    return out


def select_targets(d: Dataset, n: int, target_mean: float, min_reviews: int = 1) -> list[str]:
    """The ``n`` products whose mean score is closest to ``target_mean``."""
    means = mean_scores(d)
    eligible = [p for p, m in means.items() if len(d.reviews_of_product(p)) >= min_reviews]
    eligible.sort(key=lambda p: (abs(means[p] - target_mean), p))
    if len(eligible) < n:
        raise ConfigError(f"only {len(eligible)} products with >= {min_reviews} reviews; need {n} targets")
    return eligible[:n]


def _attack_plan(script: AttackScript, others: Sequence[str], n: int, rng) -> list[str]:
    """Product sequence for an injected attacker: targets cycled, interleaved
    with camouflage products when the script scores others honestly."""
    targets = list(script.target_products)
    if not (script.honest_elsewhere and others):
        return [targets[i % len(targets)] for i in range(n)]
    n_camo = n // 2
    camo = list(rng.permutation(np.asarray(others, dtype=object)))
    while len(camo) < n_camo:
        camo += list(rng.permutation(np.asarray(others, dtype=object)))
    plan = []
    t = c = 0
    for i in range(n):
        if i % 2 == 1 and c < n_camo:
            plan.append(str(camo[c]))
            c += 1
        else:
            plan.append(targets[t % len(targets)])
            t += 1
    return plan


def inject_attacker(
    d: Dataset,
    script: AttackScript,
    n_reviews: int,
    rng: np.random.Generator,
    attacker_id: Optional[str] = None,
    policy: Optional[HonestPolicy] = None,
) -> Dataset:
    """Append one attacker writing ``n_reviews`` reviews according to ``script``.

    Honest (camouflage) scores are drawn around each product's current mean
    score. Existing reviews are kept as they are and in the same order.
    """
    product_ids = [p.product_id for p in d.products]
    missing = [p for p in script.target_products if p not in set(product_ids)]
    if missing:
        raise TargetNotFoundError(missing)
    if n_reviews < 0:
        raise ValueError("n_reviews must be non-negative")
    policy = policy or HonestPolicy()
    taken = {r.reviewer_id for r in d.reviewers}
    if attacker_id is None:
        attacker_id = "attacker"
        i = 1
        while attacker_id in taken:
            i += 1
            attacker_id = f"attacker{i}"
    elif attacker_id in taken:
        raise ValueError(f"reviewer id {attacker_id!r} already exists")

    means = mean_scores(d)
    targets = set(script.target_products)
    others = [p for p in product_ids if p not in targets and p in means]
    plan = _attack_plan(script, others, n_reviews, rng)

    taken_reviews = {v.review_id for v in d.reviews}
    new = []
    for k, product_id in enumerate(plan, start=1):
        if script.attacks(product_id, k):
            score, spam = script.attack_score, True
        elif script.honest_score is not None and product_id in targets:
            score, spam = script.honest_score, False
        else:
            centre = means.get(product_id, d.product(product_id).true_quality)
            if centre is None:
                centre = MAX_SCORE / 2
            score, spam = gen_honest_score(centre, policy, rng), False
        review_id = f"{attacker_id}-v{k:04d}"
        if review_id in taken_reviews:
            raise ValueError(f"review id {review_id!r} already exists")
        new.append(Review(review_id, attacker_id, product_id, score, k, spam))

    return Dataset(
        products=d.products,
        reviewers=(*d.reviewers, Reviewer(attacker_id, True)),
        reviews=(*d.reviews, *new),
    )
