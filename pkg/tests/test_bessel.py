"""
Tests for integer-order Bessel functions.
"""
import numpy as np
import pytest

from bessel import MAX_ORDER, BesselOrderError, bessel_j, bessel_j_table
from utils import UsageError


class TestBesselJ:
    """Test cases for bessel_j"""

    def test_values_at_zero(self):
        assert bessel_j(0, 0.0) == pytest.approx(1.0, abs=1e-15)
        for n in (1, 6, 12, 30):
            assert bessel_j(n, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_first_zero(self):
        assert abs(bessel_j(0, 2.404825557695773)) < 1e-12

    def test_recurrence(self):
        x = np.linspace(0.5, 40.0, 50)
        for n in range(1, 30):
            lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x)
            assert lhs == pytest.approx(2 * n / x * bessel_j(n, x), abs=1e-12)

    def test_normalisation_sum(self):
        x = np.linspace(0.0, 30.0, 31)
        total = bessel_j(0, x) + 2 * sum(bessel_j(2 * n, x) for n in range(1, MAX_ORDER // 2 + 1))
        assert total == pytest.approx(np.ones_like(x), abs=1e-12)

    def test_array_shape_preserved(self):
        grid = np.zeros((4, 5))
        assert bessel_j(3, grid).shape == (4, 5)

    @pytest.mark.parametrize('n', [-1, MAX_ORDER + 1, 2.5])
    def test_invalid_order(self, n):
        with pytest.raises(BesselOrderError):
            bessel_j(n, 1.0)

    def test_negative_argument(self):
        with pytest.raises(UsageError):
            bessel_j(0, -1.0)


class TestBesselTable:
    """Test cases for bessel_j_table"""

    def test_table_matches_single_orders(self):
        x = np.linspace(0.0, 10.0, 11)
        table = bessel_j_table(8, x)
        assert table.shape == (9, 11)
        for n in range(9):
            assert table[n] == pytest.approx(bessel_j(n, x))
