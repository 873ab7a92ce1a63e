"""Tests for the CHSH expression, ladder scan, and detection threshold."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttbell import chsh
from ttbell.quantum import ideal_correlator

TOL = 1e-12
TWO_SQRT_TWO = 2.0 * math.sqrt(2.0)


class TestLadder:
    @pytest.mark.parametrize("alpha", [0.0, math.pi / 6, math.pi / 4, 1.1])
    def test_separation_constraints(self, alpha):
        s = chsh.ladder_settings(alpha)
        assert abs(s.a - s.b) == pytest.approx(alpha, abs=TOL)
        assert abs(s.a - s.b_prime) == pytest.approx(alpha, abs=TOL)
        assert abs(s.a_prime - s.b_prime) == pytest.approx(alpha, abs=TOL)
        assert abs(s.a_prime - s.b) == pytest.approx(3 * alpha, abs=TOL)

    def test_degenerate_ladder(self):
        s = chsh.ladder_settings(0.0)
        assert s.a == s.a_prime == s.b == s.b_prime == 0.0


class TestChshValue:
    def test_quantum_maximum_at_quarter_pi(self):
        report = chsh.chsh_value(ideal_correlator, chsh.ladder_settings(math.pi / 4))
        assert report.s_value == pytest.approx(TWO_SQRT_TWO, abs=TOL)
        assert report.violated
        assert report.margin == pytest.approx(TWO_SQRT_TWO - 2.0, abs=TOL)

    def test_vanishing_combination(self):
        report = chsh.chsh_value(ideal_correlator, chsh.ladder_settings(math.pi / 2))
        assert report.s_value == pytest.approx(0.0, abs=TOL)
        assert not report.violated

    def test_classical_bound_not_flagged(self):
        report = chsh.chsh_value(ideal_correlator, chsh.ladder_settings(0.0))
        assert report.s_value == pytest.approx(2.0, abs=TOL)
        assert not report.violated

    def test_out_of_range_correlator_rejected(self):
        with pytest.raises(chsh.InvalidCorrelatorError):
            chsh.chsh_value(lambda a, b: 1.5, chsh.ladder_settings(0.3))

    @given(st.floats(min_value=-4.0, max_value=4.0, allow_nan=False))
    def test_closed_form_matches_expression(self, alpha):
        report = chsh.chsh_value(ideal_correlator, chsh.ladder_settings(alpha))
        assert chsh.s_ideal_closed(alpha) == pytest.approx(report.s_value, abs=TOL)

    def test_closed_form_matches_expression_on_dense_grid(self):
        for k in range(10_000):
            alpha = k * (2.0 * math.pi / 10_000)
            report = chsh.chsh_value(ideal_correlator, chsh.ladder_settings(alpha))
            assert abs(chsh.s_ideal_closed(alpha) - report.s_value) <= TOL


class TestSIdeal:
    def test_frozen_values(self):
        assert chsh.s_ideal_closed(0.0) == pytest.approx(2.0, abs=TOL)
        assert chsh.s_ideal_closed(math.pi / 4) == pytest.approx(TWO_SQRT_TWO, abs=TOL)
        # |1.5 - (-1)| at pi/3, cross-checked through the expression route
        assert chsh.s_ideal_closed(math.pi / 3) == pytest.approx(2.5, abs=TOL)


class TestScan:
    def test_argmax_matches_derivative_bisection_oracle(self):
        # independent route: the stationarity condition sin(3a) = sin(a)
        def slope(x):
            return -3.0 * math.sin(x) + 3.0 * math.sin(3.0 * x)

        lo, hi = 0.6, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if slope(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        oracle = 0.5 * (lo + hi)

        rows, summary = chsh.scan_alpha(0.0, math.pi, 1e-3)
        assert len(rows) == 3142
        assert summary.alpha_star == pytest.approx(oracle, abs=1e-9)
        assert summary.alpha_star == pytest.approx(math.pi / 4, abs=1e-9)
        assert summary.s_max == pytest.approx(TWO_SQRT_TWO, abs=1e-9)

    def test_ties_break_toward_smaller_alpha(self):
        # the ladder has equal-height peaks at pi/4 and 3*pi/4
        _, summary = chsh.scan_alpha(0.0, math.pi, 1e-3)
        assert summary.alpha_star < math.pi / 2

    def test_rows_scale_with_eta_f(self):
        rows, summary = chsh.scan_alpha(0.0, 1.0, 0.1, eta_f=0.8)
        for r in rows:
            assert r.s_exp == pytest.approx(0.8 * r.s_ideal, abs=TOL)
        assert summary.s_exp_max == pytest.approx(0.8 * summary.s_max, abs=TOL)
        assert summary.violated  # 0.8 is above the 1/sqrt(2) threshold

    def test_violation_flag_tracks_threshold(self):
        _, above = chsh.scan_alpha(0.0, math.pi, 0.01, eta_f=0.72)
        assert above.violated
        _, below = chsh.scan_alpha(0.0, math.pi, 0.01, eta_f=0.70)
        assert not below.violated

    def test_first_row_at_zero(self):
        rows, _ = chsh.scan_alpha(0.0, 0.5, 0.1)
        assert rows[0].alpha == 0.0
        assert rows[0].s_ideal == pytest.approx(2.0, abs=TOL)

    def test_invalid_ranges(self):
        with pytest.raises(ValueError):
            chsh.scan_alpha(0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            chsh.scan_alpha(0.0, 1.0, -0.1)
        with pytest.raises(ValueError):
            chsh.scan_alpha(1.0, 0.0, 0.1)

    def test_single_point_range(self):
        rows, summary = chsh.scan_alpha(0.3, 0.3, 0.1)
        assert len(rows) == 1
        assert summary.alpha_star == pytest.approx(0.3, abs=1e-9)


class TestMonteCarloIntegration:
    def test_chsh_from_conditioned_estimators_matches_ideal(self):
        from ttbell import montecarlo as mc

        n = 1_000_000
        s = chsh.ladder_settings(math.pi / 4)
        pairs = [(s.a, s.b), (s.a, s.b_prime), (s.a_prime, s.b_prime), (s.a_prime, s.b)]
        cfg = mc.DetectionConfig(eta_d=0.9)
        estimates = {}
        variance = 0.0
        for k, (x, y) in enumerate(pairs):
            est = mc.estimate(mc.run(x, y, cfg, n, seed=7000 + k))
            estimates[(x, y)] = est.correlator_conditioned
            variance += est.std_error_conditioned ** 2
        report = chsh.chsh_value(lambda x, y: estimates[(x, y)], s)
        assert report.s_value == pytest.approx(TWO_SQRT_TWO, abs=4 * math.sqrt(variance))
        assert report.violated


class TestThreshold:
    def test_ideal_case_violates(self):
        r = chsh.threshold_analysis(1.0, 1.0)
        assert r.violated
        assert r.margin == pytest.approx(TWO_SQRT_TWO - 2.0, abs=1e-9)

    def test_seventy_percent_is_not_enough(self):
        r = chsh.threshold_analysis(1.0, 0.70)
        assert not r.violated
        assert r.s_exp_max == pytest.approx(1.9798989873223332, abs=1e-9)

    def test_seventy_two_percent_violates(self):
        r = chsh.threshold_analysis(0.9, 0.8)  # product 0.72
        assert r.violated
        assert r.s_exp_max == pytest.approx(2.0364675298172568, abs=1e-9)

    def test_exactly_critical_is_no_violation(self):
        r = chsh.threshold_analysis(1.0, chsh.CRITICAL_ETA_F)
        assert not r.violated

    def test_critical_value(self):
        r = chsh.threshold_analysis(0.5, 0.5)
        assert r.critical_eta_f == pytest.approx(1.0 / math.sqrt(2.0), abs=TOL)
        assert r.eta_f == pytest.approx(0.25, abs=TOL)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            chsh.threshold_analysis(1.2, 1.0)
        with pytest.raises(ValueError):
            chsh.threshold_analysis(1.0, -0.1)

    @given(
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    )
    def test_violation_iff_above_critical(self, eta_d, f):
        r = chsh.threshold_analysis(eta_d, f)
        if r.violated:
            assert r.eta_f * TWO_SQRT_TWO > 2.0
        else:
            assert r.eta_f * TWO_SQRT_TWO <= 2.0 + 1e-11
