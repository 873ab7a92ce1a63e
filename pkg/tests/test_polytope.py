"""Tests for local-polytope membership: facet oracle vs simplex certificate."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttbell import polytope as pt
from ttbell.chsh import ladder_settings
from ttbell.quantum import ideal_correlator

CORR = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


def quantum_targets(alpha, eta_f=1.0):
    s = ladder_settings(alpha)
    return tuple(eta_f * t for t in pt.targets_from_correlator(ideal_correlator, s))


class TestStructure:
    def test_sixteen_strategies_eight_facets(self):
        assert len(pt.STRATEGIES) == 16
        assert len(pt.FACET_SIGNS) == 8
        for signs in pt.FACET_SIGNS:
            assert signs[0] * signs[1] * signs[2] * signs[3] == -1

    def test_strategy_correlator_order(self):
        # (A_a*B_b, A_a*B_b', A_a'*B_b', A_a'*B_b)
        assert pt.strategy_correlators((1, -1, 1, -1)) == (1, -1, 1, -1)

    def test_every_strategy_saturates_no_facet_beyond_two(self):
        for s in pt.STRATEGIES:
            v = pt.strategy_correlators(s)
            for _, value in pt.facet_values(v):
                assert value <= 2


class TestCertificates:
    def test_uniform_zero_targets_feasible(self):
        cert = pt.polytope_check((0.0, 0.0, 0.0, 0.0))
        assert cert.feasible
        assert cert.gap == 0.0
        assert sum(cert.weights.values()) == pytest.approx(1.0, abs=1e-9)
        assert pt.reconstruct_targets(cert.weights) == pytest.approx((0, 0, 0, 0), abs=1e-9)

    def test_quantum_ladder_maximum_infeasible(self):
        cert = pt.polytope_check(quantum_targets(math.pi / 4))
        assert not cert.feasible
        assert cert.weights is None
        assert cert.gap == pytest.approx(2.0 * math.sqrt(2.0) - 2.0, abs=1e-12)
        signs, value = cert.violated_facet
        assert value == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)
        assert signs in pt.FACET_SIGNS

    def test_scaled_quantum_targets_feasible_below_threshold(self):
        targets = quantum_targets(math.pi / 4, eta_f=0.70)
        cert = pt.polytope_check(targets)
        assert cert.feasible
        rec = pt.reconstruct_targets(cert.weights)
        assert max(abs(x - y) for x, y in zip(rec, targets)) < 1e-9
        assert all(w >= 0.0 for w in cert.weights.values())

    def test_single_strategy_vertex(self):
        cert = pt.polytope_check((1.0, 1.0, 1.0, 1.0))
        assert cert.feasible
        rec = pt.reconstruct_targets(cert.weights)
        assert rec == pytest.approx((1, 1, 1, 1), abs=1e-9)

    def test_nonlocal_box_corner_infeasible(self):
        cert = pt.polytope_check((1.0, 1.0, 1.0, -1.0))
        assert not cert.feasible
        assert cert.gap == pytest.approx(2.0, abs=1e-12)

    def test_rejects_out_of_range_targets(self):
        with pytest.raises(ValueError):
            pt.polytope_check((1.5, 0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            pt.polytope_check((0.0, 0.0, 0.0))

    def test_infeasible_iff_ladder_scaled_above_threshold(self):
        assert not pt.polytope_check(quantum_targets(math.pi / 4, 0.72)).feasible
        assert pt.polytope_check(quantum_targets(math.pi / 4, 0.70)).feasible


class TestAgreement:
    def test_methods_agree_on_random_targets(self):
        rng = np.random.default_rng(314159)
        for _ in range(1000):
            targets = tuple(rng.uniform(-1.0, 1.0, 4))
            cert = pt.polytope_check(targets)
            max_facet = max(v for _, v in pt.facet_values(targets))
            assert cert.feasible == (max_facet <= 2.0 + 1e-9)
            if cert.feasible:
                rec = pt.reconstruct_targets(cert.weights)
                assert max(abs(x - y) for x, y in zip(rec, targets)) < 1e-9
                assert sum(cert.weights.values()) == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=200)
    @given(CORR, CORR, CORR, CORR)
    def test_feasible_mixtures_reproduce_targets(self, e1, e2, e3, e4):
        cert = pt.polytope_check((e1, e2, e3, e4))
        if cert.feasible:
            rec = pt.reconstruct_targets(cert.weights)
            assert rec == pytest.approx((e1, e2, e3, e4), abs=1e-9)
        else:
            assert cert.violated_facet[1] > 2.0

    def test_mixtures_of_strategies_always_feasible(self):
        rng = np.random.default_rng(2718)
        for _ in range(200):
            w = rng.dirichlet(np.ones(16))
            targets = np.zeros(4)
            for weight, s in zip(w, pt.STRATEGIES):
                targets += weight * np.array(pt.strategy_correlators(s))
            targets = np.clip(targets, -1.0, 1.0)
            cert = pt.polytope_check(tuple(targets))
            assert cert.feasible

    def test_factorized_model_correlators_always_feasible(self):
        from ttbell import lhv
        from ttbell.chsh import chsh_value

        rng = np.random.default_rng(161803)
        settings = ladder_settings(math.pi / 4)
        t1 = [settings.a, settings.a_prime]
        t2 = [settings.b, settings.b_prime]
        for _ in range(1000):
            model = lhv.random_factorized_model(rng, int(rng.integers(1, 4)), t1, t2)

            def corr(x, y, m=model):
                _, moments = lhv.average_over_lambda(m, x, y)
                return moments.correlator

            targets = pt.targets_from_correlator(corr, settings)
            assert chsh_value(corr, settings).s_value <= 2.0 + 1e-12
            cert = pt.polytope_check(targets)
            assert cert.feasible
            rec = pt.reconstruct_targets(cert.weights)
            assert max(abs(x - y) for x, y in zip(rec, targets)) < 1e-9
