"""Built-in attack scenarios.

``scenario1-*``  ten reviewers, three products; the last reviewer only
                 attacks product 3.
``scenario2-*``  same population, but the spammer reviews every product and
                 is honest everywhere except product 3.
``scenario3-*``  three reviewers, three products; the spammer alternates
                 20 honest and 20 attacking reviews on product 3.
``inject-*``     a 16-reviewer / 670-product rating table with one attacker
                 appended who writes 20 reviews, half of them attacks.

``*-slander`` pushes a good product down, ``*-promote`` pushes a poor one up.
"""

from __future__ import annotations

import numpy as np

from .simulator import AttackScript, ConfigError, HonestPolicy, InjectionSpec, ReviewerSpec, ScenarioConfig

# spread of honest scores used by every preset (standard deviation 0.5 stars)
PRESET_POLICY = HonestPolicy(variance=0.25)
TOTAL_REVIEWS = 1000
BLOCK_LENGTH = 20


def _products(qualities):
    return [(f"p{i}", q) for i, q in enumerate(qualities, start=1)]


def _honest(n, products):
    return [ReviewerSpec(f"r{i}", tuple(products)) for i in range(1, n + 1)]


def _scenario1(name, seed, target_quality, attack_score):
    products = _products([3.0, 3.0, target_quality])
    ids = [p for p, _ in products]
    spammer = ReviewerSpec("r10", ("p3",), AttackScript("simple", ("p3",), attack_score, honest_elsewhere=False))
    return ScenarioConfig(name, products, _honest(9, ids), [spammer], TOTAL_REVIEWS, seed, PRESET_POLICY)


def _scenario2(name, seed, target_quality, attack_score):
    products = _products([3.0, 3.0, target_quality])
    ids = [p for p, _ in products]
    spammer = ReviewerSpec("r10", tuple(ids), AttackScript("over_product", ("p3",), attack_score, honest_elsewhere=True))
    return ScenarioConfig(name, products, _honest(9, ids), [spammer], TOTAL_REVIEWS, seed, PRESET_POLICY)


def _scenario3(name, seed, attack_score):
    products = _products([3.0, 3.0, 3.0])
    ids = [p for p, _ in products]
    script = AttackScript("over_time", ("p3",), attack_score, honest_elsewhere=True, block_length=BLOCK_LENGTH, honest_score=3.0)
    spammer = ReviewerSpec("r3", ("p3",), script)
    return ScenarioConfig(name, products, _honest(2, ids), [spammer], TOTAL_REVIEWS, seed, PRESET_POLICY)


def _rating_table(name, seed, attack_score, target_mean):
    # structure is fixed; only the drawn scores depend on ``seed``
    layout = np.random.default_rng(670)
    grid = np.arange(1, 11) / 2.0
    qualities = layout.choice(grid, size=670)
    products = _products([float(q) for q in qualities])
    connections = {f"r{i}": [] for i in range(1, 17)}
    for pid, _ in products:
        for r in layout.choice(16, size=4, replace=False):
            connections[f"r{r + 1}"].append(pid)
    honest = [ReviewerSpec(r, tuple(ps)) for r, ps in connections.items()]
    total = sum(len(ps) for ps in connections.values())
    injection = InjectionSpec(
        attacker_id="r17",
        kind="over_product",
        attack_score=attack_score,
        n_reviews=20,
        n_targets=10,
        target_mean=target_mean,
    )
    return ScenarioConfig(name, products, honest, [], total, seed, PRESET_POLICY, injection)


PRESETS = {
    "scenario1-slander": lambda seed: _scenario1("scenario1-slander", seed, 3.0, 0.0),
    "scenario1-promote": lambda seed: _scenario1("scenario1-promote", seed, 1.0, 5.0),
    "scenario2-slander": lambda seed: _scenario2("scenario2-slander", seed, 3.0, 0.0),
    "scenario2-promote": lambda seed: _scenario2("scenario2-promote", seed, 1.0, 5.0),
    "scenario3-slander": lambda seed: _scenario3("scenario3-slander", seed, 1.0),
    "scenario3-promote": lambda seed: _scenario3("scenario3-promote", seed, 5.0),
    "inject-slander": lambda seed: _rating_table("inject-slander", seed, 0.5, 3.75),
    "inject-promote": lambda seed: _rating_table("inject-promote", seed, 5.0, 1.5),
}


def preset(name: str, seed: int = 0) -> ScenarioConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return factory(seed)
