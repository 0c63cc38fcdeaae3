"""
Tests for steady-state solving and branch continuation.
"""
import math

import numpy as np
import pytest

from equilibria import (DEDUP_DISTANCE, RESIDUAL_TOL, BranchEndError, continue_branch, default_seeds,
                        find_steady_states, polish)
from model import builtin
from utils import UsageError


def kgs_branches(mu, m=0.5):
    """u± = μ/2m ± sqrt((μ/2m)² - 1), v = m/u"""
    a = mu / (2 * m)
    root = math.sqrt(a * a - 1)
    return [(a - root, m / (a - root)), (a + root, m / (a + root))]


class TestFindSteadyStates:
    """Test cases for find_steady_states"""

    def setup_method(self):
        self.kgs = builtin('kgs')

    def test_kgs_fold_point(self):
        states = find_steady_states(self.kgs, 1.0)
        found = [(s.u_star, s.v_star) for s in states]
        assert any(abs(u) < 1e-8 and abs(v - 1.0) < 1e-8 for u, v in found)
        assert any(abs(u - 1.0) < 1e-3 and abs(v - 0.5) < 1e-3 for u, v in found)

    def test_kgs_reported_state(self):
        states = find_steady_states(self.kgs, 1.002)
        assert any(abs(s.u_star - 1.071) < 2e-3 and abs(s.v_star - 0.467) < 2e-3 for s in states)

    def test_logistic_reported_state(self):
        states = find_steady_states(builtin('logistic_klausmeier'), 2.200)
        assert any(abs(s.u_star - 0.465) < 2e-3 and abs(s.v_star - 1.809) < 2e-3 for s in states)

    def test_states_converged_and_distinct(self):
        states = find_steady_states(self.kgs, 1.5)
        assert all(s.residual < RESIDUAL_TOL for s in states)
        for i, a in enumerate(states):
            for b in states[i + 1:]:
                assert a.distance(b) > DEDUP_DISTANCE

    def test_matches_closed_form_over_mu_grid(self):
        for mu in np.linspace(1.05, 3.0, 9):
            states = find_steady_states(self.kgs, mu)
            for u_expected, v_expected in kgs_branches(mu):
                assert any(abs(s.u_star - u_expected) < 1e-9 and abs(s.v_star - v_expected) < 1e-9
                           for s in states)

    def test_sorted_by_u(self):
        states = find_steady_states(self.kgs, 2.0)
        us = [s.u_star for s in states]
        assert us == sorted(us)

    def test_requires_seeds(self):
        with pytest.raises(UsageError):
            find_steady_states(self.kgs, 1.0, seeds=np.empty((0, 2)))

    def test_non_finite_mu(self):
        with pytest.raises(UsageError):
            find_steady_states(self.kgs, math.nan)

    def test_default_seed_lattice(self):
        seeds = default_seeds(u_max=2.0, v_max=3.0, n=4)
        assert seeds.shape[1] == 2
        assert seeds[:, 0].max() <= 2.0
        assert seeds[:, 1].max() <= 3.0


class TestContinueBranch:
    """Test cases for continue_branch"""

    def setup_method(self):
        self.kgs = builtin('kgs')
        u, v = kgs_branches(1.002)[1]
        self.start = polish(self.kgs, u, v, 1.002)

    def test_follows_upper_branch(self):
        state = continue_branch(self.kgs, self.start, 1.01)
        u_expected = kgs_branches(1.01)[1][0]
        assert state.u_star > self.start.u_star
        assert state.u_star == pytest.approx(u_expected, abs=1e-9)

    def test_identity(self):
        assert continue_branch(self.kgs, self.start, self.start.mu) is self.start

    def test_fold_ends_branch(self):
        with pytest.raises(BranchEndError) as info:
            continue_branch(self.kgs, self.start, 0.9)
        assert info.value.last_state.mu < self.start.mu
        assert info.value.last_state.mu >= 1.0 - 1e-6
