import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prefscale.core import AnchorEntry, Outcome, PairJudgment, ValidationError, all_pairs
from prefscale.davidson import (
    DbtConfig,
    davidson_probs,
    fit_anchored_dbt,
    neg_log_posterior,
)
from prefscale.diagnostics import srcc


def judgment(a, b, outcome, rater="r"):
    return PairJudgment(rater=rater, a=a, b=b, dimension="overall", outcome=outcome)


class TestDavidsonProbs:
    def test_bt_reduction_at_zero_nu(self):
        assert davidson_probs(1.3, 1.3, 0.0) == pytest.approx((0.5, 0.0, 0.5))

    def test_equal_strengths_unit_nu(self):
        win, tie, loss = davidson_probs(2.0, 2.0, 1.0)
        assert (win, tie, loss) == pytest.approx((1 / 3, 1 / 3, 1 / 3), abs=1e-12)

    def test_zero_strengths_nu_two(self):
        win, tie, loss = davidson_probs(0.0, 0.0, 2.0)
        assert (win, tie, loss) == pytest.approx((0.25, 0.5, 0.25), abs=1e-12)

    def test_negative_nu_rejected(self):
        with pytest.raises(ValidationError):
            davidson_probs(0.0, 0.0, -0.1)

    def test_overflow_safe(self):
        win, tie, loss = davidson_probs(800.0, -800.0, 1.0)
        assert win == pytest.approx(1.0)
        assert tie == pytest.approx(0.0)
        assert loss == pytest.approx(0.0)

    @given(
        st.floats(-30, 30), st.floats(-30, 30), st.floats(0, 100),
    )
    def test_rows_sum_to_one_and_symmetry(self, qi, qj, nu):
        win, tie, loss = davidson_probs(qi, qj, nu)
        assert win + tie + loss == pytest.approx(1.0, abs=1e-12)
        win_r, tie_r, loss_r = davidson_probs(qj, qi, nu)
        assert win == pytest.approx(loss_r, abs=1e-12)
        assert tie == pytest.approx(tie_r, abs=1e-12)


class TestNegLogPosterior:
    def test_empty_is_zero(self):
        value, grad = neg_log_posterior(["a", "b"], np.zeros(2), 0.0, [], [], 0.1)
        assert value == 0.0
        assert np.all(grad == 0.0)

    def test_anchor_at_target_contributes_nothing(self):
        anchors = [AnchorEntry(image="a", mean_rating=4.0, level=4)]
        q = np.array([1.0, 0.0])  # target is 4 - 3 = 1
        value, grad = neg_log_posterior(["a", "b"], q, 0.0, [], anchors, 0.1)
        assert value == 0.0
        assert np.all(grad[:-1] == 0.0)

    def test_anchor_penalty_value(self):
        anchors = [AnchorEntry(image="a", mean_rating=4.0, level=4)]
        q = np.array([3.0, 0.0])
        value, grad = neg_log_posterior(["a", "b"], q, 0.0, [], anchors, 0.1)
        assert value == pytest.approx(0.1 * (3.0 - 1.0) ** 2)
        assert grad[0] == pytest.approx(2 * 0.1 * 2.0)

    def test_likelihood_value_matches_probs(self):
        js = [judgment("a", "b", Outcome.A_WINS), judgment("a", "b", Outcome.TIE)]
        q = np.array([0.4, -0.2])
        nu = 0.7
        value, _ = neg_log_posterior(["a", "b"], q, math.log(nu), js, [], 0.0)
        win, tie, _ = davidson_probs(0.4, -0.2, nu)
        assert value == pytest.approx(-(math.log(win) + math.log(tie)), abs=1e-12)

    def _finite_difference(self, images, q, log_nu, js, anchors, lam, h=1e-5):
        grad = np.zeros(len(q) + 1)
        for k in range(len(q)):
            qp, qm = q.copy(), q.copy()
            qp[k] += h
            qm[k] -= h
            vp, _ = neg_log_posterior(images, qp, log_nu, js, anchors, lam)
            vm, _ = neg_log_posterior(images, qm, log_nu, js, anchors, lam)
            grad[k] = (vp - vm) / (2 * h)
        vp, _ = neg_log_posterior(images, q, log_nu + h, js, anchors, lam)
        vm, _ = neg_log_posterior(images, q, log_nu - h, js, anchors, lam)
        grad[-1] = (vp - vm) / (2 * h)
        return grad

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(5)
        for trial in range(20):
            images = [f"i{k}" for k in range(6)]
            q = rng.normal(0, 1, size=6)
            log_nu = float(rng.normal(0, 0.5))
            js = []
            for a, b in all_pairs(images):
                if rng.random() < 0.7:
                    outcome = rng.choice([Outcome.A_WINS, Outcome.TIE, Outcome.B_WINS])
                    js.append(judgment(a, b, outcome))
            anchors = [
                AnchorEntry(image="i0", mean_rating=2.0, level=2),
                AnchorEntry(image="i3", mean_rating=4.0, level=4),
            ]
            _, analytic = neg_log_posterior(images, q, log_nu, js, anchors, 0.1)
            numeric = self._finite_difference(images, q, log_nu, js, anchors, 0.1)
            assert np.max(np.abs(analytic - numeric)) < 1e-5

    def test_unknown_image_in_judgment(self):
        with pytest.raises(ValidationError):
            neg_log_posterior(["a", "b"], np.zeros(2), 0.0,
                              [judgment("a", "zz", Outcome.TIE)], [], 0.0)


def sample_davidson_judgments(q_true, nu, n_pairs, rng):
    images = sorted(q_true)
    js = []
    for _ in range(n_pairs):
        a, b = rng.choice(images, size=2, replace=False)
        a, b = (a, b) if a < b else (b, a)
        win, tie, loss = davidson_probs(q_true[a], q_true[b], nu)
        u = rng.random()
        outcome = Outcome.A_WINS if u < win else (Outcome.TIE if u < win + tie else Outcome.B_WINS)
        js.append(judgment(a, b, outcome))
    return js


class TestFitAnchoredDbt:
    def test_planted_recovery(self):
        rng = np.random.default_rng(17)
        q_true = {f"i{k:02d}": 0.7 * k for k in range(10)}
        js = sample_davidson_judgments(q_true, nu=0.8, n_pairs=2000, rng=rng)
        params = fit_anchored_dbt(js, [], DbtConfig(anchor_penalty=0.0))
        images = sorted(q_true)
        rho = srcc([q_true[i] for i in images], [params.qualities[i] for i in images])
        assert rho >= 0.99
        assert params.tie_propensity == pytest.approx(0.8, abs=0.25)

    def test_all_ties_large_nu_equal_q(self):
        js = [judgment(a, b, Outcome.TIE) for a, b in all_pairs([f"i{k}" for k in range(5)])]
        params = fit_anchored_dbt(js, [], DbtConfig(anchor_penalty=0.0))
        qs = np.array(list(params.qualities.values()))
        assert np.max(np.abs(qs - qs.mean())) < 1e-4
        assert params.tie_propensity > 100.0  # driven to the log-nu bound

    def test_nu_zero_data_bounded_below(self):
        # no ties observed: nu estimate collapses toward the lower clamp
        js = [judgment("a", "b", Outcome.A_WINS)] * 10
        params = fit_anchored_dbt(js, [], DbtConfig(anchor_penalty=0.0))
        assert params.tie_propensity >= math.exp(-20) * 0.99

    def test_identified_under_different_inits(self):
        rng = np.random.default_rng(23)
        q_true = {f"i{k}": float(v) for k, v in enumerate(rng.normal(0, 1, size=8))}
        js = sample_davidson_judgments(q_true, nu=0.5, n_pairs=600, rng=rng)
        anchors = [AnchorEntry(image="i0", mean_rating=3.5, level=4)]
        a = fit_anchored_dbt(js, anchors, DbtConfig())
        b = fit_anchored_dbt(
            js, anchors, DbtConfig(),
            initial_q={img: float(rng.normal(0, 2)) for img in q_true},
            initial_nu=3.0,
        )
        images = sorted(q_true)
        qa = np.array([a.qualities[i] for i in images])
        qb = np.array([b.qualities[i] for i in images])
        assert srcc(qa, qb) == pytest.approx(1.0)
        assert np.max(np.abs(qa - qb)) < 1e-3

    def test_translation_invariance_unanchored(self):
        js = [judgment("a", "b", Outcome.A_WINS), judgment("b", "c", Outcome.TIE)]
        q = np.array([0.3, -0.1, 0.2])
        v1, _ = neg_log_posterior(["a", "b", "c"], q, 0.0, js, [], 0.0)
        v2, _ = neg_log_posterior(["a", "b", "c"], q + 7.5, 0.0, js, [], 0.0)
        assert v1 == pytest.approx(v2, abs=1e-9)

    def test_empty_judgments_rejected(self):
        with pytest.raises(ValidationError):
            fit_anchored_dbt([], [], DbtConfig())

    def test_median_anchor_target_switch(self):
        anchors = [AnchorEntry(image="a", mean_rating=3.6, level=4, median_rating=4.0)]
        q = np.array([1.0, 0.0])
        v_mean, _ = neg_log_posterior(
            ["a", "b"], q, 0.0, [], anchors, 1.0, DbtConfig(anchor_target="mean")
        )
        v_median, _ = neg_log_posterior(
            ["a", "b"], q, 0.0, [], anchors, 1.0, DbtConfig(anchor_target="median")
        )
        assert v_mean == pytest.approx((1.0 - 0.6) ** 2)
        assert v_median == pytest.approx(0.0)
