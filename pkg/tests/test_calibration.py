import math

import pytest
from hypothesis import given, strategies as st

from prefscale.calibration import (
    BridgeCalibration,
    SigmoidFit,
    apply_sigmoid,
    bridge_calibrate,
    fit_global_sigmoid,
)
from prefscale.core import ValidationError

SIGMA_1 = math.exp(1) / (1 + math.exp(1))  # sigma(1)


class TestFitGlobalSigmoid:
    def test_two_point_exact_inversion(self):
        # s = 1 + 4*sigma(q) has anchor values 3 at q=0 and 1+4*sigma(1) at q=1
        fit = fit_global_sigmoid([(0.0, 3.0), (1.0, 1 + 4 * SIGMA_1)])
        assert fit.a == pytest.approx(1.0, abs=1e-9)
        assert fit.b == pytest.approx(0.0, abs=1e-9)

    def test_two_point_steeper_curve(self):
        # logit((4.462 - 1)/4) = logit(0.8655) = 1.8617..., not 1
        fit = fit_global_sigmoid([(0.0, 3.0), (1.0, 4.462)])
        assert fit.a == pytest.approx(math.log(0.8655 / 0.1345), abs=1e-9)
        assert fit.b == pytest.approx(0.0, abs=1e-9)

    def test_symmetric_points_give_b_minus_a_q0(self):
        q0 = 2.5
        delta = 0.8
        s_hi = 1 + 4 / (1 + math.exp(-delta))
        s_lo = 1 + 4 / (1 + math.exp(delta))
        fit = fit_global_sigmoid([(q0 - 1.0, s_lo), (q0 + 1.0, s_hi)])
        assert fit.b == pytest.approx(-fit.a * q0, abs=1e-9)

    def test_duplicate_point_does_not_change_fit(self):
        points = [(0.0, 2.2), (1.0, 3.0), (2.0, 3.9)]
        fit1 = fit_global_sigmoid(points)
        fit2 = fit_global_sigmoid(points + [(1.0, 3.0), (1.0, 3.0)])
        # adding duplicates of a point already on the fitted line is exact;
        # in general least squares re-weights, so use an exactly-collinear set
        line = [(q, 1 + 4 / (1 + math.exp(-(0.7 * q - 0.3)))) for q in (0.0, 1.0, 2.0)]
        fit3 = fit_global_sigmoid(line)
        fit4 = fit_global_sigmoid(line + [line[1]])
        assert (fit3.a, fit3.b) == pytest.approx((fit4.a, fit4.b), abs=1e-9)
        assert fit1.a > 0 and fit2.a > 0

    def test_rejects_boundary_rating(self):
        with pytest.raises(ValidationError):
            fit_global_sigmoid([(0.0, 1.0), (1.0, 3.0)])

    def test_rejects_single_point(self):
        with pytest.raises(ValidationError):
            fit_global_sigmoid([(0.0, 3.0)])

    def test_rejects_non_positive_slope(self):
        with pytest.raises(ValidationError):
            fit_global_sigmoid([(0.0, 4.0), (1.0, 2.0)])

    def test_round_trip_reproduces_anchors_two_points(self):
        points = [(0.3, 2.4), (1.7, 3.8)]
        fit = fit_global_sigmoid(points)
        for q, s in points:
            assert apply_sigmoid(q, fit) == pytest.approx(s, abs=1e-9)


class TestApplySigmoid:
    def test_zero_argument_is_midpoint(self):
        fit = SigmoidFit(a=2.0, b=-1.0)
        assert apply_sigmoid(0.5, fit) == pytest.approx(3.0)

    def test_log3_argument(self):
        fit = SigmoidFit(a=1.0, b=0.0)
        assert apply_sigmoid(math.log(3), fit) == pytest.approx(4.0, abs=1e-12)

    def test_limits(self):
        fit = SigmoidFit(a=1.0, b=0.0)
        assert apply_sigmoid(-1e9, fit) == pytest.approx(1.0)
        assert apply_sigmoid(1e9, fit) == pytest.approx(5.0)

    @given(st.floats(-12, 12), st.floats(1e-5, 10))
    def test_strictly_monotone(self, q, gap):
        # float64 cannot distinguish tail values once the sigmoid saturates,
        # so the property is asserted on the responsive region
        fit = SigmoidFit(a=0.8, b=0.2)
        assert apply_sigmoid(q, fit) < apply_sigmoid(q + gap, fit)


class TestBridgeCalibrate:
    def cal(self, **kw):
        defaults = dict(q_min=0.0, q_max=10.0, steepness=6.0)
        defaults.update(kw)
        return BridgeCalibration(**defaults)

    def test_midpoint(self):
        assert bridge_calibrate(5.0, self.cal()) == pytest.approx(3.0)

    def test_extrema_evaluate_eq_endpoints(self):
        # 1 + 4*sigma(-3) and 1 + 4*sigma(3), computed directly
        floor = 1 + 4 / (1 + math.exp(3))
        ceiling = 1 + 4 / (1 + math.exp(-3))
        assert bridge_calibrate(0.0, self.cal()) == pytest.approx(floor, abs=1e-12)
        assert bridge_calibrate(10.0, self.cal()) == pytest.approx(ceiling, abs=1e-12)
        assert floor == pytest.approx(1.1897034927102673, abs=1e-12)
        assert ceiling == pytest.approx(4.810296507289733, abs=1e-12)

    def test_out_of_range_clamps(self):
        cal = self.cal()
        assert bridge_calibrate(-100.0, cal) == bridge_calibrate(0.0, cal)
        assert bridge_calibrate(+100.0, cal) == bridge_calibrate(10.0, cal)

    def test_invalid_extrema(self):
        with pytest.raises(ValidationError):
            BridgeCalibration(q_min=1.0, q_max=1.0)

    def test_ten_point_span(self):
        cal = self.cal(low=1.0, high=10.0)
        assert bridge_calibrate(5.0, cal) == pytest.approx(5.5)
        assert cal.score_floor == pytest.approx(1 + 9 / (1 + math.exp(3)))

    @given(st.floats(0, 9.9), st.floats(1e-6, 5))
    def test_monotone_within_range(self, q, gap):
        cal = self.cal()
        assert bridge_calibrate(q, cal) < bridge_calibrate(min(q + gap, 10.0), cal)

    @given(st.floats(-50, 50))
    def test_output_within_floor_and_ceiling(self, q):
        cal = self.cal()
        s = bridge_calibrate(q, cal)
        assert cal.score_floor - 1e-12 <= s <= cal.score_ceiling + 1e-12
