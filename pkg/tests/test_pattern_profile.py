"""
Tests for dihedral initial profiles and pattern diagnostics.
"""
import math

import numpy as np
import pytest

from localform import analyze_point
from matching import RING, SPOT_A, from_coefficients, reference_solution
from model import builtin
from pattern_profile import (Field2D, PatternSpec, RingExistenceError, count_gaps, count_peaks,
                             dihedral_symmetry_error, pattern_amplitude, pattern_correlation, pattern_radius,
                             ring_field, spotA_field)
from presets import default_eps
from turing import find_turing_point
from utils import UsageError

N_GRID = 129
EPS_FRACTION = 0.005


class TestSpotAField:
    """Test cases for spot A profiles on the KGS Turing point"""

    def setup_method(self):
        self.model = builtin('kgs')
        self.tp = find_turing_point(self.model, 1.002, (1.071, 0.467))
        self.lf, self.pred = analyze_point(self.model, self.tp)
        self.eps = EPS_FRACTION * self.tp.mu
        self.L = 20 * self.tp.wavelength

    def field(self, name='hexagon', n_grid=N_GRID, L=None, amplitude=1.0):
        spec = PatternSpec(SPOT_A, reference_solution(name), self.eps, amplitude)
        return spotA_field(self.tp, self.pred, spec, n_grid, L or self.L)

    def test_centre_value(self):
        field = self.field(amplitude=0.5)
        a0 = reference_solution('hexagon').coeffs[0]
        centre = N_GRID // 2
        expected = 0.5 * self.pred.P3 * a0
        assert field.u[centre, centre] - self.tp.u_star == pytest.approx(expected, rel=1e-12)
        assert field.v[centre, centre] - self.tp.v_star == pytest.approx(self.pred.P2 * expected, rel=1e-12)

    def test_kgs_centre_is_a_gap(self):
        field = self.field()
        centre = N_GRID // 2
        assert field.u[centre, centre] < self.tp.u_star

    def test_v_deviation_proportional(self):
        field = self.field('square')
        assert field.v - self.tp.v_star == pytest.approx(self.pred.P2 * (field.u - self.tp.u_star), abs=1e-14)
        assert pattern_correlation(field, self.tp.u_star, self.tp.v_star) == pytest.approx(-1.0)

    def test_square_symmetry_exact_on_grid(self):
        assert dihedral_symmetry_error(self.field('square'), 4) < 1e-6

    def test_hexagon_symmetry_to_interpolation_error(self):
        field = self.field(n_grid=257, L=5 * self.tp.wavelength)
        assert dihedral_symmetry_error(field, 6) < 1e-2 * pattern_amplitude(field, self.tp)

    def test_cubic_sampling_on_figure_grid(self):
        self.eps = default_eps(self.tp, self.pred)
        field = self.field(n_grid=256)
        amplitude = pattern_amplitude(field, self.tp)
        cubic = dihedral_symmetry_error(field, 6, order=3)
        assert cubic < dihedral_symmetry_error(field, 6)
        assert cubic < 0.05 * amplitude

    def test_unsupported_sampling_order(self):
        with pytest.raises(UsageError):
            dihedral_symmetry_error(self.field('square'), 4, order=2)

    def test_broken_symmetry_detected(self):
        field = self.field('square')
        field.u[N_GRID // 2 + 5, N_GRID // 2 + 9] += 0.1
        assert dihedral_symmetry_error(field, 4) > 0.05

    def test_decays_towards_boundary(self):
        field = self.field()
        deviation = np.abs(field.u - self.tp.u_star)
        boundary = max(deviation[0].max(), deviation[-1].max(), deviation[:, 0].max(), deviation[:, -1].max())
        assert boundary < 1e-3 * deviation.max()

    def test_wrong_side_of_bifurcation(self):
        spec = PatternSpec(SPOT_A, reference_solution('hexagon'), -self.eps)
        with pytest.raises(UsageError):
            spotA_field(self.tp, self.pred, spec, N_GRID, self.L)

    def test_kind_mismatch(self):
        with pytest.raises(UsageError):
            PatternSpec(RING, reference_solution('hexagon'), self.eps)


class TestRingField:
    """Test cases for ring profiles"""

    def setup_method(self):
        self.model = builtin('kgs')
        self.tp = find_turing_point(self.model, 1.002, (1.071, 0.467))
        self.lf, self.pred = analyze_point(self.model, self.tp)
        self.eps = EPS_FRACTION * self.tp.mu
        self.spec = PatternSpec(RING, from_coefficients(RING, 6, 0, [1.0]), self.eps)

    def test_requires_negative_p4(self):
        assert self.lf.c3 > 0
        with pytest.raises(RingExistenceError):
            ring_field(self.tp, self.lf, self.spec, N_GRID, 200.0)

    def test_single_coefficient_is_axisymmetric(self):
        field = ring_field(self.tp, self.lf, self.spec, N_GRID, 200.0, force=True)
        assert np.allclose(field.u, field.u.T, atol=1e-13)
        assert dihedral_symmetry_error(field, 4) < 1e-10

    def test_centre_value(self):
        field = ring_field(self.tp, self.lf, self.spec, N_GRID, 200.0, force=True)
        centre = N_GRID // 2
        scale = (self.lf.c0 * self.eps) ** 0.75
        assert field.u[centre, centre] == pytest.approx(self.tp.u_star, abs=1e-14)
        assert field.v[centre, centre] - self.tp.v_star == pytest.approx(2 * scale * self.lf.U1[1], rel=1e-12)


class TestDiagnostics:
    """Test cases for gap, peak and radius counts"""

    def setup_method(self):
        r_grid = np.linspace(-10.0, 10.0, 101)
        X, Y = np.meshgrid(r_grid, r_grid, indexing='ij')
        dips = np.exp(-((X - 4) ** 2 + Y ** 2)) + np.exp(-((X + 4) ** 2 + Y ** 2))
        bump = np.exp(-(X ** 2 + (Y - 6) ** 2))
        self.u_star = 1.0
        self.field = Field2D(101, 20.0, self.u_star - dips + 0.5 * bump, np.zeros((101, 101)))

    def test_counts(self):
        assert count_gaps(self.field, self.u_star) == 2
        assert count_peaks(self.field, self.u_star) == 1

    def test_radius(self):
        radius = pattern_radius(self.field, self.u_star)
        assert 4.0 < radius < 4.0 + math.sqrt(math.log(5.0)) + 0.3

    def test_uniform_field(self):
        field = Field2D.uniform(64, 10.0, 1.0, 2.0)
        assert count_gaps(field, 1.0) == 0
        assert pattern_radius(field, 1.0) == 0.0
        assert pattern_correlation(field, 1.0, 2.0) == 0.0

    def test_grid_shape_checked(self):
        with pytest.raises(UsageError):
            Field2D(10, 1.0, np.zeros((10, 9)), np.zeros((10, 10)))
