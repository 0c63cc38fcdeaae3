"""
Tests for local-form assembly, predictors and P4 sign maps.
"""
import numpy as np
import pytest

from kgs_oracle import closed_form, closed_form_guess, closed_form_sign_map
from localform import (NO_TURING, P4_NEGATIVE, P4_POSITIVE, Predictors, analyze_point, bilinear_Q,
                       build_local_form, interpret, p4_sign_map, perturbed_eigenvalues, predictors,
                       trilinear_C)
from model import builtin, partial_tensor
from turing import find_turing_point

REPORTED_PREDICTORS = [
    ('kgs', (1.002, 1.071, 0.467), (6.923, -0.348, -1.512, 0.248)),
    ('logistic_klausmeier', (2.200, 0.465, 1.809), (0.503, -0.282, -0.965, 0.015)),
    ('nfc_gilad', (1.635, 0.474, 0.768), (0.381, -0.207, -0.575, 0.818)),
    ('von_hardenberg', (0.169, 0.017, 0.173), (-0.384, 1.707, 0.8427, 0.0012)),
    ('von_hardenberg', (0.414, 0.271, 0.556), (0.217, 2.578, -1.512, 0.014)),
]


def kgs_local_form(m=0.5, delta_v=7.2):
    model = builtin('kgs', {'m': m, 'D_v': delta_v})
    mu, u, v = closed_form_guess(model)
    tp = find_turing_point(model, mu, (u, v))
    return model, tp, build_local_form(model, tp)


class TestPredictors:
    """Test cases for the four predictors"""

    @pytest.mark.parametrize('name, guess, expected', REPORTED_PREDICTORS)
    def test_reported_predictors(self, name, guess, expected):
        model = builtin(name)
        tp = find_turing_point(model, guess[0], guess[1:])
        _, pred = analyze_point(model, tp)
        for value, target in zip(pred.as_tuple(), expected):
            assert value == pytest.approx(target, abs=2e-3)

    def test_kgs_closed_form_predictors(self):
        _, _, lf = kgs_local_form()
        cf = closed_form(0.5, 7.2)
        assert predictors(lf).as_tuple() == pytest.approx(cf.predictors(), rel=1e-6)

    def test_signs(self):
        assert Predictors(1.0, -2.0, 0.0, 3.0).signs() == (1, -1, 0, 1)


class TestLocalForm:
    """Test cases for build_local_form"""

    def setup_method(self):
        self.model, self.tp, self.lf = kgs_local_form()

    def test_eigenvector_relations(self):
        k2 = self.lf.k ** 2
        assert self.lf.M1 @ self.lf.U0 == pytest.approx(-k2 * self.lf.U0, abs=1e-10)
        assert self.lf.M1 @ self.lf.U1 == pytest.approx(-k2 * self.lf.U1 + k2 * self.lf.U0, abs=1e-10)

    def test_dual_basis(self):
        basis = np.column_stack([self.lf.U0, self.lf.U1])
        dual = np.vstack([self.lf.U0d, self.lf.U1d])
        assert dual @ basis == pytest.approx(np.eye(2), abs=1e-12)

    def test_tensors_symmetric(self):
        q, c = self.lf.q, self.lf.c
        assert np.allclose(q, q.transpose(0, 2, 1))
        for axes in ((0, 2, 1, 3), (0, 1, 3, 2), (0, 3, 2, 1)):
            assert np.allclose(c, c.transpose(axes))

    def test_quadratic_matches_second_partials(self):
        values = partial_tensor(self.model, self.tp.u_star, self.tp.v_star, self.tp.mu)
        X = np.array([0.3, -0.7])
        for i, component in enumerate(('f', 'g')):
            expected = 0.5 * (values[(component, 2, 0, 0)] * X[0] ** 2
                              + 2 * values[(component, 1, 1, 0)] * X[0] * X[1]
                              + values[(component, 0, 2, 0)] * X[1] ** 2)
            assert bilinear_Q(self.lf, X, X)[i] == pytest.approx(expected, abs=1e-12)

    def test_kgs_closed_form_intermediates(self):
        cf = closed_form(0.5, 7.2)
        expected = cf.intermediates
        assert self.lf.M1 == pytest.approx(expected['M1'], rel=1e-8)
        assert self.lf.U0 == pytest.approx(expected['U0'], rel=1e-8)
        assert self.lf.U1d == pytest.approx(expected['U1d'], rel=1e-8)
        assert bilinear_Q(self.lf, self.lf.U0, self.lf.U0) == pytest.approx(expected['Q00'], rel=1e-8)
        assert bilinear_Q(self.lf, self.lf.U0, self.lf.U1) == pytest.approx(expected['Q01'], rel=1e-8)
        U0 = self.lf.U0
        assert trilinear_C(self.lf, U0, U0, U0) == pytest.approx(expected['C000'], rel=1e-8)
        assert self.lf.M2 == pytest.approx(expected['M2'], rel=1e-6, abs=1e-9)

    def test_m2_method_recorded(self):
        assert self.lf.m2_method == 'finite-difference'
        assert self.lf.as_dict()['m2_method'] == 'finite-difference'


class TestInterpret:
    """Test cases for the plain-language predictor reading"""

    def test_kgs_reading(self):
        sentences = interpret(Predictors(6.923, -0.348, -1.512, 0.248))
        assert sentences[-1] == "Expect anti-phase spot A-type localised gaps."
        assert 'supercritically' in sentences[3]

    def test_in_phase_peaks(self):
        sentences = interpret(Predictors(-0.384, 1.707, 0.8427, 0.0012))
        assert sentences[-1] == "Expect in-phase spot A-type localised peaks."
        assert 'ε < 0' in sentences[0]

    def test_ring_prediction(self):
        sentences = interpret(Predictors(1.0, -1.0, 1.0, -0.5))
        assert 'ring-type' in sentences[3]


class TestPerturbedEigenvalues:
    """Test cases for the splitting of the repeated root"""

    def test_splitting_scale(self):
        model, tp, lf = kgs_local_form()
        eps = 1e-4 * np.sign(lf.c0)
        roots = perturbed_eigenvalues(model, tp, eps)
        k2 = tp.k ** 2
        expected_imag = 2 * tp.k * np.sqrt(lf.c0 * eps)
        assert roots.real == pytest.approx([-k2, -k2], rel=0.05)
        assert roots[1].imag == pytest.approx(expected_imag, rel=0.05)
        assert roots[0].imag == pytest.approx(-expected_imag, rel=0.05)

    def test_unstable_side_real_roots(self):
        model, tp, lf = kgs_local_form()
        roots = perturbed_eigenvalues(model, tp, -1e-4 * np.sign(lf.c0))
        assert np.all(np.abs(roots.imag) < 1e-12)


class TestSignMap:
    """Test cases for three-way P4 classification"""

    def test_small_kgs_grid(self):
        template = builtin('kgs')
        sign_map = p4_sign_map(template, 'D_v', [3.0, 7.2], 'm', [0.5], mu_range=(0.5, 3.0),
                               guess=closed_form_guess)
        assert sign_map.classes[0, 0] == NO_TURING
        assert sign_map.classes[1, 0] == P4_POSITIVE
        assert sign_map.p4[1, 0] == pytest.approx(closed_form(0.5, 7.2).P4, rel=1e-6)
        assert list(sign_map.rows())[1] == (7.2, 0.5, P4_POSITIVE)

    def test_matches_closed_form_class(self):
        # delta_v*m = 3
        template = builtin('kgs')
        sign_map = p4_sign_map(template, 'D_v', [6.0], 'm', [0.5], mu_range=(0.5, 3.0),
                               guess=closed_form_guess)
        assert sign_map.classes[0, 0] == closed_form_class(6.0, 0.5)

    @pytest.mark.slow
    def test_generic_matches_closed_form(self):
        delta_vs = np.linspace(0.5, 20.0, 40)
        ms = np.linspace(0.1, 2.0, 40)
        sign_map = p4_sign_map(builtin('kgs'), 'D_v', delta_vs, 'm', ms, mu_range=(0.1, 10.0),
                               guess=closed_form_guess, workers=4)
        expected = closed_form_sign_map(delta_vs, ms)
        above = np.outer(delta_vs, ms) > 2.0
        # cells with a neighbour across delta_v*m = 2 may lose their Turing point to the generic search
        padded = np.pad(above, 1, mode='edge')
        straddles = np.zeros_like(above)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                straddles |= padded[1 + di:41 + di, 1 + dj:41 + dj] != above
        for i, j in zip(*np.nonzero(sign_map.classes != expected)):
            assert straddles[i, j], f"delta_v={delta_vs[i]:.4g}, m={ms[j]:.4g}: {sign_map.reasons.get((i, j))}"
            assert sign_map.classes[i, j] == NO_TURING
        interior = ~straddles
        assert np.array_equal(sign_map.classes[interior], expected[interior])


def closed_form_class(delta_v, m):
    cf = closed_form(m, delta_v)
    if not cf.has_turing_point:
        return NO_TURING
    return P4_NEGATIVE if cf.P4 < 0 else P4_POSITIVE
