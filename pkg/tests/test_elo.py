import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prefscale.core import AnchorEntry, Outcome, PairJudgment, ValidationError, all_pairs
from prefscale.diagnostics import srcc
from prefscale.elo import (
    EloConfig,
    EloState,
    expected_score,
    level_to_elo_target,
    run_anchored_elo,
    run_elo,
    update_pair,
)
from prefscale.simulate import noiseless_bt_judgments

TAU10 = 400.0 / math.log(10.0)


def judgment(a, b, outcome, rater="r"):
    return PairJudgment(rater=rater, a=a, b=b, dimension="overall", outcome=outcome)


class TestExpectedScore:
    def test_equal_ratings(self):
        assert expected_score(1500.0, 1500.0, TAU10) == pytest.approx(0.5)

    def test_classic_400_gap(self):
        # 1/(1 + 10^(-400/400)) = 10/11
        assert expected_score(1900.0, 1500.0, TAU10) == pytest.approx(10 / 11, abs=1e-12)
        assert expected_score(1500.0, 1900.0, TAU10) == pytest.approx(1 / 11, abs=1e-12)

    @given(st.floats(-2000, 2000), st.floats(-2000, 2000))
    def test_complement(self, qa, qb):
        assert expected_score(qa, qb, TAU10) + expected_score(qb, qa, TAU10) == pytest.approx(1.0)

    def test_bad_temperature(self):
        with pytest.raises(ValidationError):
            expected_score(1.0, 2.0, 0.0)


class TestUpdatePair:
    def test_zero_residual_no_change(self):
        state = EloState(ratings={"a": 1500.0, "b": 1500.0})
        update_pair(state, ("a", "b"), 0.5, step=32.0, temperature=TAU10)
        assert state.ratings == {"a": 1500.0, "b": 1500.0}

    def test_win_from_equal_ratings(self):
        state = EloState(ratings={"a": 1500.0, "b": 1500.0})
        update_pair(state, ("a", "b"), 1.0, step=32.0, temperature=TAU10)
        assert state.ratings["a"] == pytest.approx(1516.0)
        assert state.ratings["b"] == pytest.approx(1484.0)

    def test_conservation(self):
        state = EloState(ratings={"a": 1712.0, "b": 1390.0})
        before = sum(state.ratings.values())
        update_pair(state, ("a", "b"), 0.0, step=24.0, temperature=TAU10)
        assert sum(state.ratings.values()) == pytest.approx(before, abs=1e-9)

    def test_unknown_image(self):
        state = EloState(ratings={"a": 1500.0})
        with pytest.raises(ValidationError):
            update_pair(state, ("a", "zz"), 1.0, 32.0, TAU10)


class TestRunElo:
    def test_single_judgment_one_pass(self):
        config = EloConfig(passes=1)
        table = run_elo([judgment("a", "b", Outcome.A_WINS)], config)
        assert table["a"] == pytest.approx(1516.0)
        assert table["b"] == pytest.approx(1484.0)

    def test_all_ties_stay_at_initial(self):
        js = [judgment(a, b, Outcome.TIE) for a, b in all_pairs(["a", "b", "c"])]
        table = run_elo(js, EloConfig(passes=5))
        assert all(q == 1500.0 for q in table.values())

    def test_empty_input(self):
        with pytest.raises(ValidationError):
            run_elo([])

    def test_noiseless_complete_graph_recovers_ranking(self):
        rng = np.random.default_rng(3)
        latents = {f"i{k:02d}": float(v) for k, v in enumerate(rng.uniform(1, 5, size=10))}
        table = run_elo(noiseless_bt_judgments(latents), EloConfig())
        images = sorted(latents)
        rho = srcc([latents[i] for i in images], [table[i] for i in images])
        assert rho == pytest.approx(1.0)

    def test_deterministic(self):
        js = [
            judgment("a", "b", Outcome.A_WINS),
            judgment("b", "c", Outcome.TIE),
            judgment("a", "c", Outcome.B_WINS),
        ]
        assert run_elo(js) == run_elo(js)

    def test_label_invariance(self):
        js = [
            judgment("a", "b", Outcome.A_WINS),
            judgment("b", "c", Outcome.TIE),
            judgment("a", "c", Outcome.A_WINS),
        ]
        renamed = []
        mapping = {"a": "x", "b": "y", "c": "z"}
        for j in js:
            renamed.append(judgment(mapping[j.a], mapping[j.b], j.outcome))
        table = run_elo(js)
        table_renamed = run_elo(renamed)
        for old, new in mapping.items():
            assert table[old] == table_renamed[new]

    def test_monotone_in_extra_wins(self):
        base = [judgment("a", "b", Outcome.A_WINS)]
        gaps = []
        for extra in range(4):
            js = base * (extra + 1)
            table = run_elo(js, EloConfig(passes=3))
            gaps.append(table["a"] - table["b"])
        assert all(g2 >= g1 - 1e-12 for g1, g2 in zip(gaps, gaps[1:]))

    def test_conservation_whole_run(self):
        rng = np.random.default_rng(7)
        images = [f"i{k}" for k in range(6)]
        js = [
            judgment(a, b, rng.choice([Outcome.A_WINS, Outcome.TIE, Outcome.B_WINS]))
            for a, b in all_pairs(images)
        ]
        table = run_elo(js, EloConfig(passes=10))
        assert sum(table.values()) == pytest.approx(1500.0 * len(images), abs=1e-6)


class TestLevelTarget:
    def test_center(self):
        assert level_to_elo_target(3.0, EloConfig()) == 1500.0

    def test_linear_map(self):
        assert level_to_elo_target(4.0, EloConfig()) == 1900.0
        assert level_to_elo_target(2.0, EloConfig()) == 1100.0

    def test_non_integer_interpolates(self):
        assert level_to_elo_target(3.5, EloConfig()) == pytest.approx(1700.0)

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            level_to_elo_target(5.5, EloConfig())


class TestAnchoredElo:
    def anchors(self, image="a", mean=4.0, level=4):
        return [AnchorEntry(image=image, mean_rating=mean, level=level)]

    def test_all_ties_anchor_converges_toward_target(self):
        js = [judgment(a, b, Outcome.TIE) for a, b in all_pairs(["a", "b", "c"])]
        distances = []
        for passes in (1, 5, 25, 100):
            table = run_anchored_elo(js, self.anchors(), EloConfig(passes=passes))
            distances.append(abs(table["a"] - 1900.0))
        assert all(d2 < d1 for d1, d2 in zip(distances, distances[1:]))

    def test_full_strength_pins_anchor(self):
        js = [judgment(a, b, Outcome.TIE) for a, b in all_pairs(["a", "b", "c"])]
        config = EloConfig(anchor_strength=1.0, passes=4)
        table = run_anchored_elo(js, self.anchors(), config)
        assert table["a"] == pytest.approx(1900.0)

    def test_anchor_contraction_per_pass(self):
        js = [judgment("a", "b", Outcome.TIE)]
        config = EloConfig(passes=1, anchor_strength=0.15)
        table = run_anchored_elo(js, self.anchors(), config)
        # one tie pass leaves q_a at 1500, then one pull-back toward 1900
        assert table["a"] == pytest.approx(1500.0 + 0.15 * 400.0)

    def test_absent_anchor_image(self):
        js = [judgment("a", "b", Outcome.TIE)]
        with pytest.raises(ValidationError, match="zz"):
            run_anchored_elo(js, self.anchors(image="zz"), EloConfig())

    def test_requires_anchors(self):
        with pytest.raises(ValidationError):
            run_anchored_elo([judgment("a", "b", Outcome.TIE)], [], EloConfig())

    def test_anchor_pairs_use_small_step(self):
        # one decisive judgment against an anchor moves ratings by K_a/2, not K/2
        js = [judgment("a", "b", Outcome.A_WINS)]
        config = EloConfig(passes=1, anchor_strength=0.15, step_k=32.0, step_k_anchor=6.0)
        table = run_anchored_elo(js, self.anchors(image="a", mean=3.0, level=3), config)
        # pair touches anchor "a": update is 6 * 0.5 = 3, then pull-back toward 1500
        assert table["b"] == pytest.approx(1497.0)
        assert table["a"] == pytest.approx(1500.0 + 3.0 - 0.15 * 3.0)

    def test_noiseless_recovery_with_consistent_anchors(self):
        # Anchors whose targets agree with the planted scale keep the exact
        # order; sparse anchors under decisive data can pin an image into a
        # narrower band than its floating neighbors occupy.
        latents = {f"i{k:02d}": float(v) for k, v in enumerate(np.linspace(1.5, 4.5, 10))}
        js = noiseless_bt_judgments(latents)
        anchors = [
            AnchorEntry(image=i, mean_rating=latents[i], level=min(4, max(2, round(latents[i]))))
            for i in sorted(latents)
        ]
        table = run_anchored_elo(js, anchors, EloConfig())
        images = sorted(latents)
        rho = srcc([latents[i] for i in images], [table[i] for i in images])
        assert rho == pytest.approx(1.0)
