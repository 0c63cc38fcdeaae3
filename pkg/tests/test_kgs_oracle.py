"""
Tests for the Klausmeier-Gray-Scott closed forms and the oracle comparison.
"""
import numpy as np
import pytest

from equilibria import polish
from kgs_oracle import (OraclePreconditionError, closed_form, closed_form_guess, closed_form_sign_map,
                        oracle_compare)
from localform import NO_TURING
from model import builtin
from turing import discriminant


class TestClosedForm:
    """Test cases for closed_form"""

    def test_reported_values(self):
        cf = closed_form(0.5, 7.2)
        assert cf.u_star_minus == pytest.approx(1.071, abs=2e-3)
        assert cf.v_star == pytest.approx(0.467, abs=2e-3)
        assert cf.mu_star_minus == pytest.approx(1.002, abs=2e-3)
        assert cf.k == pytest.approx(0.3177, abs=1e-3)
        assert cf.predictors() == pytest.approx((6.923, -0.348, -1.512, 0.248), abs=2e-3)

    def test_belyakov_devaney_root_positive(self):
        for m, delta_v in ((0.5, 7.2), (1.0, 1.5), (0.2, 30.0)):
            assert closed_form(m, delta_v).lambda_plus > 0

    def test_repeated_roots_zero_discriminant(self):
        for m, delta_v in ((0.5, 7.2), (1.0, 4.0), (0.3, 20.0)):
            cf = closed_form(m, delta_v)
            model = builtin('kgs', {'m': m, 'D_v': delta_v})
            for u, mu in ((cf.u_star_minus, cf.mu_star_minus), (cf.u_star_plus, cf.mu_star_plus)):
                state = polish(model, u, m / u, mu)
                assert state.u_star == pytest.approx(u, rel=1e-10)
                assert abs(discriminant(model, state)) < 1e-10

    def test_no_turing_point_below_threshold(self):
        cf = closed_form(0.5, 3.9)
        assert cf.lambda_minus >= 0
        assert not cf.has_turing_point
        assert cf.predictors() is None

    def test_no_repeated_roots(self):
        cf = closed_form(0.5, 1.0)
        assert cf.u_star_minus is None
        assert closed_form_guess(builtin('kgs', {'D_v': 1.0})) is None

    def test_guess(self):
        mu, u, v = closed_form_guess(builtin('kgs'))
        assert (mu, u, v) == pytest.approx((1.002, 1.071, 0.467), abs=2e-3)

    def test_invalid_parameters(self):
        with pytest.raises(OraclePreconditionError):
            closed_form(-0.5, 7.2)


class TestOracleCompare:
    """Test cases for the pipeline cross-check"""

    def test_default_point_passes(self):
        report = oracle_compare(0.5, 7.2)
        assert report.passed, '\n'.join(report.lines())
        assert report.lines()[-1].startswith('PASS')

    def test_precondition(self):
        with pytest.raises(OraclePreconditionError):
            oracle_compare(0.5, 1.95 / 0.5)

    @pytest.mark.slow
    def test_random_points(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            m = float(rng.uniform(0.1, 2.0))
            x = float(rng.uniform(2.1, 20.0))
            report = oracle_compare(m, x / m)
            assert report.passed, '\n'.join(report.lines())
            P1, P2, P3, _ = report.closed.predictors()
            assert P1 > 0 and P2 < 0 and P3 < 0
            assert report.generic['P1'] > 0 and report.generic['P2'] < 0 and report.generic['P3'] < 0


class TestClosedFormSignMap:
    """Test cases for the closed-form P4 classification"""

    def test_threshold_line(self):
        delta_vs = np.linspace(0.5, 20.0, 40)
        ms = np.linspace(0.1, 2.0, 40)
        classes = closed_form_sign_map(delta_vs, ms)
        assert classes.shape == (40, 40)
        for i, delta_v in enumerate(delta_vs):
            for j, m in enumerate(ms):
                if delta_v * m <= 2.0:
                    assert classes[i, j] == NO_TURING
                else:
                    assert classes[i, j] != NO_TURING
