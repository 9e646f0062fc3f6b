"""Shared test utilities: an independent reference solver and random scenarios."""

import numpy as np

from revtrust.simulator import ATTACK_KINDS, AttackScript, HonestPolicy, ReviewerSpec, ScenarioConfig


def oracle_solve(reviews, reviewers, products, init=0.5, tol=1e-6, max_iter=1000):
    """Plain-loop fixed-point iteration written without the package's engine.

    ``reviews`` is a list of ``(review_id, reviewer_id, product_id, raw_score, seq)``.
    Returns ``(trust, honesty, reliability)`` dicts.
    """
    rel = {p: init for p in products}
    trust = {r: init for r in reviewers}
    hon = {v[0]: init for v in reviews}
    for _ in range(max_iter):
        new_hon = {}
        for vid, _, pid, score, _ in reviews:
            s = score / 5.0
            R = rel[pid]
            if R > 0.5:
                W = R
            elif R < 0.5:
                W = 1.0 - R
            else:
                W = 0.5
            h = 1.0 - abs(s - R) / W
            new_hon[vid] = h if h > 0 else 0.0
        new_trust = {}
        for r in reviewers:
            mine = [(seq, new_hon[vid]) for vid, rid, _, _, seq in reviews if rid == r]
            if mine:
                new_trust[r] = sum(q * h for q, h in mine) / sum(q for q, _ in mine)
            else:
                new_trust[r] = 0.5
        new_rel = {}
        for p in products:
            num = den = 0.0
            for vid, rid, pid, score, _ in reviews:
                if pid == p:
                    w = new_trust[rid] * new_hon[vid]
                    num += w * score / 5.0
                    den += w
            new_rel[p] = num / den if den > 0 else 0.5
        delta = 0.0
        for old, new in ((trust, new_trust), (hon, new_hon), (rel, new_rel)):
            for k in new:
                delta = max(delta, abs(new[k] - old[k]))
        trust, hon, rel = new_trust, new_hon, new_rel
        if delta <= tol:
            break
    return trust, hon, rel


def random_config(rng: np.random.Generator, seed: int) -> ScenarioConfig:
    """A random small scenario: 2-8 products, 3-10 honest reviewers, 0-2 spammers, <= 200 reviews."""
    n_products = int(rng.integers(2, 9))
    products = [(f"p{i}", float(rng.uniform(0.5, 4.5))) for i in range(n_products)]
    ids = [p for p, _ in products]

    def subset():
        k = int(rng.integers(1, n_products + 1))
        return tuple(sorted(rng.choice(ids, size=k, replace=False).tolist()))

    honest = [ReviewerSpec(f"h{i}", subset()) for i in range(int(rng.integers(3, 11)))]
    spammers = []
    for j in range(int(rng.integers(0, 3))):
        conn = subset()
        kind = str(rng.choice(ATTACK_KINDS))
        block = int(rng.integers(1, 10)) if kind == "over_time" else None
        script = AttackScript(kind, (conn[0],), float(rng.choice([0.0, 5.0])), kind != "simple", block_length=block)
        spammers.append(ReviewerSpec(f"s{j}", conn, script))
    return ScenarioConfig("random", products, honest, spammers, int(rng.integers(20, 201)), seed, HonestPolicy(0.25))
