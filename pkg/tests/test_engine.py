from dataclasses import replace
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from revtrust.domain import Dataset, Product, Review, Reviewer, build_dataset
from revtrust.engine import (
    FALLBACK,
    CoverageError,
    ScoreState,
    SolverConfig,
    dumps_scores,
    iterate_once,
    loads_scores,
    product_reliability,
    review_honesty,
    reviewer_trust,
    solve,
)
from revtrust.presets import preset
from revtrust.simulator import run_scenario

from .helpers import oracle_solve

unit = st.floats(min_value=0, max_value=1, allow_nan=False)


def one_review(score=3.0):
    return Dataset(
        products=[Product("p1")],
        reviewers=[Reviewer("r1")],
        reviews=[Review("v1", "r1", "p1", score, 1)],
    )


class TestHonesty:
    def test_slander_against_reliable_product(self):
        assert review_honesty(F(0), F(3, 5)) == 0

    def test_promote_against_poor_product(self):
        assert review_honesty(F(1), F(1, 5)) == 0

    @pytest.mark.parametrize("r", [F(0), F(1, 5), F(1, 2), F(3, 5), F(1)])
    def test_perfect_match(self, r):
        assert review_honesty(r, r) == 1

    def test_partial(self):
        # independent calculator: deviation over the larger of r and 1 - r
        s, r = F(4, 5), F(3, 5)
        expected = 1 - (s - r) / max(r, 1 - r)
        assert expected == F(2, 3)
        assert review_honesty(s, r) == expected
        assert review_honesty(0.8, 0.6) == pytest.approx(2 / 3, abs=1e-12)

    def test_width_at_half(self):
        assert review_honesty(F(1, 4), F(1, 2)) == F(1, 2)

    @given(unit, unit)
    def test_range(self, s, r):
        assert 0 <= review_honesty(s, r) <= 1

    @given(unit, unit, unit)
    def test_monotone_in_distance(self, r, a, b):
        near, far = sorted([a, b], key=lambda s: abs(s - r))
        assert review_honesty(near, r) >= review_honesty(far, r)

    @given(st.fractions(0, 1, max_denominator=1000), st.fractions(0, 1, max_denominator=1000))
    def test_one_iff_match(self, s, r):
        assert (review_honesty(s, r) == 1) == (s == r)


class TestTrust:
    def test_single(self):
        assert reviewer_trust([(1, F(3, 7))]) == F(3, 7)

    def test_recency_weighting(self):
        reviews = [(1, 1), (2, 1), (3, 0), (4, 0)]
        # brute force: repeat each honesty seq times and take the plain mean
        expanded = [h for seq, h in reviews for _ in range(seq)]
        assert F(sum(expanded), len(expanded)) == F(3, 10)
        assert reviewer_trust([(q, F(h)) for q, h in reviews]) == F(3, 10)

    def test_all_honest(self):
        assert reviewer_trust([(k, 1.0) for k in range(1, 30)]) == 1.0

    def test_empty_fallback(self):
        assert reviewer_trust([]) == FALLBACK

    @given(st.lists(unit, min_size=1, max_size=30))
    def test_convex(self, hs):
        t = reviewer_trust(list(enumerate(hs, start=1)))
        assert min(hs) - 1e-12 <= t <= max(hs) + 1e-12


class TestReliability:
    def test_single(self):
        assert product_reliability([(1, 1, F(3, 5))]) == F(3, 5)

    def test_weighted(self):
        entries = [(F(1), F(1), F(4, 5)), (F(1, 2), F(1, 2), F(2, 5))]
        t, h, s = map(np.array, zip(*[(1.0, 1.0, 0.8), (0.5, 0.5, 0.4)]))
        assert np.average(s, weights=t * h) == pytest.approx(0.72, abs=1e-12)
        assert product_reliability(entries) == F(18, 25)

    def test_zero_weight(self):
        assert product_reliability([(0, 1, 0.9), (1, 0, 0.1)]) == 0.5
        assert product_reliability([]) == 0.5

    def test_subnormal_weight(self):
        assert product_reliability([(1.0, 5e-324, 0.5)]) == 0.5

    @given(st.lists(st.tuples(unit, unit, unit), min_size=1, max_size=20))
    def test_weighted_mean_bounds(self, entries):
        positive = [s for t, h, s in entries if t * h > 0]
        assume(positive)
        r = product_reliability(entries)
        assert min(positive) - 1e-12 <= r <= max(positive) + 1e-12


class TestIterateOnce:
    def test_single_review_trace(self):
        d = one_review(3.0)
        out = iterate_once(d, ScoreState.uniform(d, 0.5))
        # s = 0.6, R = 0.5: honesty = 1 - 0.1 / 0.5
        assert out.honesty["v1"] == pytest.approx(0.8, abs=1e-12)
        assert out.trust["r1"] == pytest.approx(0.8, abs=1e-12)
        assert out.reliability["p1"] == pytest.approx(0.6, abs=1e-12)

    def test_no_reviews(self):
        d = Dataset(products=[Product("p")], reviewers=[Reviewer("r")])
        prev = ScoreState.uniform(d, 0.5)
        assert iterate_once(d, prev) == prev

    def test_idempotent_at_fixed_point(self):
        d = one_review(3.0)
        fixed = ScoreState({"r1": 1.0}, {"v1": 1.0}, {"p1": 0.6})
        assert iterate_once(d, fixed) == fixed

    def test_coverage_mismatch(self):
        d = one_review()
        with pytest.raises(CoverageError):
            iterate_once(d, ScoreState({"r1": 0.5}, {"v1": 0.5}, {}))
        with pytest.raises(CoverageError):
            iterate_once(d, ScoreState({"r1": 0.5}, {"v1": 0.5}, {"p1": 0.5, "extra": 0.5}))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2), st.integers(0, 10)), min_size=1, max_size=20), unit)
    def test_range(self, rows, init):
        d = build_dataset([{"reviewer_id": f"r{a}", "product_id": f"p{b}", "score": c / 2} for a, b, c in rows])
        state = ScoreState.uniform(d, init)
        for _ in range(3):
            state = iterate_once(d, state)
            for values in (state.trust, state.honesty, state.reliability):
                assert all(0 <= x <= 1 for x in values.values())


class TestSolve:
    def test_single_review_fixed_point(self):
        res = solve(one_review(3.0), SolverConfig(tolerance=1e-9))
        assert res.converged
        assert res.state.reliability["p1"] == pytest.approx(0.6, abs=1e-12)
        assert res.state.honesty["v1"] == pytest.approx(1.0, abs=1e-9)
        assert res.state.trust["r1"] == pytest.approx(1.0, abs=1e-9)

    def test_empty(self):
        res = solve(Dataset())
        assert res.converged and res.iterations == 1
        assert res.state == ScoreState({}, {}, {})

    def test_isolated_nodes_get_fallback(self):
        d = Dataset(products=[Product("p")], reviewers=[Reviewer("r")])
        res = solve(d)
        assert res.state.trust == {"r": 0.5} and res.state.reliability == {"p": 0.5}

    def test_init_independence_on_scenario_data(self):
        cfg = replace(preset("scenario2-slander", seed=3), total_reviews=50)
        d = run_scenario(cfg)
        tol = 1e-6
        lo = solve(d, SolverConfig(tolerance=tol, initial_value=0.1)).state
        hi = solve(d, SolverConfig(tolerance=tol, initial_value=0.9)).state
        assert lo.max_abs_diff(hi) <= 10 * tol

    def test_converged_flag(self):
        d = run_scenario(preset("scenario1-slander", seed=0))
        res = solve(d, SolverConfig(max_iterations=1))
        assert not res.converged and res.iterations == 1 and res.final_delta > 1e-6
        res = solve(d)
        assert res.converged and res.final_delta <= 1e-6

    def test_fixed_point_idempotence(self):
        d = run_scenario(preset("scenario3-slander", seed=1))
        cfg = SolverConfig()
        res = solve(d, cfg)
        assert iterate_once(d, res.state).max_abs_diff(res.state) <= cfg.tolerance

    def test_permutation_bit_stable(self):
        d = run_scenario(preset("scenario2-promote", seed=5))
        rng = np.random.default_rng(0)
        shuffled = Dataset(
            products=[d.products[i] for i in rng.permutation(len(d.products))],
            reviewers=[d.reviewers[i] for i in rng.permutation(len(d.reviewers))],
            reviews=[d.reviews[i] for i in rng.permutation(len(d.reviews))],
        )
        a, b = solve(d), solve(shuffled)
        assert a == b
        assert dumps_scores(a, SolverConfig()) == dumps_scores(b, SolverConfig())

    def test_matches_oracle(self):
        d = run_scenario(replace(preset("scenario3-promote", seed=2), total_reviews=60))
        res = solve(d)
        reviews = [(v.review_id, v.reviewer_id, v.product_id, v.score, v.seq) for v in d.reviews]
        trust, hon, rel = oracle_solve(reviews, [r.reviewer_id for r in d.reviewers], [p.product_id for p in d.products])
        for mine, theirs in ((res.state.trust, trust), (res.state.honesty, hon), (res.state.reliability, rel)):
            for k in theirs:
                assert mine[k] == pytest.approx(theirs[k], abs=1e-6)


def test_lone_extreme_review_has_two_fixed_points():
    """Finding: the fixed point can depend on the initial values.

    A single 5-star review starting from reliability 0.5 is judged maximally
    dishonest, which zeroes the product's weight and keeps the reliability at
    the 0.5 fallback; started from 0.9 it converges to reliability 1.
    """
    d = one_review(5.0)
    at_half = solve(d, SolverConfig(initial_value=0.5)).state
    at_high = solve(d, SolverConfig(initial_value=0.9)).state
    assert at_half.reliability["p1"] == 0.5 and at_half.honesty["v1"] == 0.0
    assert at_high.reliability["p1"] == 1.0 and at_high.honesty["v1"] == 1.0


class TestExport:
    @pytest.mark.parametrize("fmt", ["jsonl", "csv"])
    def test_round_trip(self, fmt):
        d = run_scenario(replace(preset("scenario1-slander", seed=0), total_reviews=40))
        cfg = SolverConfig()
        res = solve(d, cfg)
        state, meta = loads_scores(dumps_scores(res, cfg, fmt), fmt)
        assert state == res.state
        assert meta["iterations"] == res.iterations
        assert meta["converged"] is True
        assert meta["final_delta"] == res.final_delta
        assert meta["tolerance"] == cfg.tolerance


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tolerance=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
