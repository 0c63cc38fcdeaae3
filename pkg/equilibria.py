"""
Uniform steady states f(u, v; μ) = 0, g(u, v; μ) = 0 and their continuation in μ
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from model import ModelSpec
from utils import NumericalError, UsageError, get_logger

logger = get_logger('equilibria')

NEWTON_MAX_ITER = 50
RESIDUAL_TOL = 1e-10
POLISH_TOL = 1e-14
DEDUP_DISTANCE = 1e-6
MAX_HALVINGS = 12
NEGATIVE_TOL = 1e-9


class BranchEndError(NumericalError):
    """Continuation could not follow the branch (typically a fold)"""

    def __init__(self, message: str, last_state: 'SteadyState'):
        self.last_state = last_state
        super().__init__(message)


@dataclass(frozen=True)
class SteadyState:
    u_star: float
    v_star: float
    mu: float
    residual: float

    @property
    def state(self) -> np.ndarray:
        return np.array([self.u_star, self.v_star])

    def distance(self, other: 'SteadyState') -> float:
        return math.hypot(self.u_star - other.u_star, self.v_star - other.v_star)

    def __str__(self) -> str:
        return f"(u*, v*, mu) = ({self.u_star:.6g}, {self.v_star:.6g}, {self.mu:.6g})"


def default_seeds(u_max: float = 10.0, v_max: float = 10.0, n: int = 8) -> np.ndarray:
    """Lattice of (u, v) seeds over [0, u_max] x [0, v_max]"""
    if u_max <= 0 or v_max <= 0 or n < 1:
        raise UsageError("seed lattice needs positive bounds and at least one point per side")
    us, vs = np.meshgrid(np.linspace(0.0, u_max, n), np.linspace(0.0, v_max, n), indexing='ij')
    return np.column_stack([us.ravel(), vs.ravel()])


def _residual_norm(model: ModelSpec, X: np.ndarray, mus: np.ndarray) -> np.ndarray:
    F = model.jet.residual(X[:, 0], X[:, 1], mus)
    norm = np.max(np.abs(F), axis=1)
    return np.where(np.isfinite(norm), norm, np.inf)


def solve_batch(model: ModelSpec, states: np.ndarray, mus,
                max_iter: int = NEWTON_MAX_ITER) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Damped Newton from many starting points at once

    Returns (solutions, residual norms, converged mask). Each point halves its
    step while the residual does not decrease; points that stall are frozen.
    """
    X = np.array(states, dtype=float).reshape(-1, 2)
    n = X.shape[0]
    mus = np.broadcast_to(np.asarray(mus, dtype=float), (n,)).copy()
    jet = model.jet

    with np.errstate(all='ignore'):
        norm = _residual_norm(model, X, mus)
        active = np.isfinite(norm)

        for _ in range(max_iter):
            idx = np.flatnonzero(active & (norm > POLISH_TOL))
            if idx.size == 0:
                break

            F = jet.residual(X[idx, 0], X[idx, 1], mus[idx])
            J = jet.jacobian(X[idx, 0], X[idx, 1], mus[idx])
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            solvable = np.isfinite(det) & (det != 0.0)
            active[idx[~solvable]] = False
            idx, F, J, det = idx[solvable], F[solvable], J[solvable], det[solvable]
            if idx.size == 0:
                break

            step = np.column_stack([
                -(J[:, 1, 1] * F[:, 0] - J[:, 0, 1] * F[:, 1]) / det,
                -(-J[:, 1, 0] * F[:, 0] + J[:, 0, 0] * F[:, 1]) / det,
            ])

            pending = np.ones(idx.size, dtype=bool)
            t = np.ones(idx.size)
            for _ in range(MAX_HALVINGS):
                trial = X[idx[pending]] + t[pending, None] * step[pending]
                trial_norm = _residual_norm(model, trial, mus[idx[pending]])
                better = trial_norm < norm[idx[pending]]
                accepted = idx[pending][better]
                X[accepted] = trial[better]
                norm[accepted] = trial_norm[better]
                still = np.flatnonzero(pending)[~better]
                pending[:] = False
                pending[still] = True
                t[still] *= 0.5
                if not pending.any():
                    break

            # no decrease after all halvings: stalled at the noise floor or stuck
            active[idx[pending]] = False

    converged = np.isfinite(norm) & (norm < RESIDUAL_TOL) & np.all(np.isfinite(X), axis=1)
    return X, norm, converged


def _deduplicate(candidates: List[SteadyState]) -> List[SteadyState]:
    kept: List[SteadyState] = []
    for state in sorted(candidates, key=lambda s: s.residual):
        scale = max(1.0, math.hypot(state.u_star, state.v_star))
        if all(state.distance(other) > DEDUP_DISTANCE * scale for other in kept):
            kept.append(state)
    return sorted(kept, key=lambda s: (s.u_star, s.v_star))


def find_steady_states(model: ModelSpec, mu: float, seeds: Optional[Sequence[Sequence[float]]] = None,
                       allow_negative: bool = False, u_max: float = 10.0, v_max: float = 10.0) -> List[SteadyState]:
    """All distinct steady states reachable from the seeds, sorted by u"""
    if not math.isfinite(mu):
        raise UsageError(f"mu must be finite (got {mu})")
    seeds = default_seeds(u_max, v_max) if seeds is None else np.asarray(seeds, dtype=float).reshape(-1, 2)
    if seeds.shape[0] == 0:
        raise UsageError("at least one seed is required")

    X, norm, converged = solve_batch(model, seeds, mu)
    skipped = int(np.count_nonzero(~converged))
    if skipped:
        logger.warning(f"{model.name}: {skipped} of {seeds.shape[0]} seeds did not converge at mu={mu:g}")

    candidates = []
    for (u, v), residual in zip(X[converged], norm[converged]):
        if not allow_negative and (u < -NEGATIVE_TOL or v < -NEGATIVE_TOL):
            continue
        candidates.append(SteadyState(float(u), float(v), float(mu), float(residual)))

    states = _deduplicate(candidates)
    if not states:
        logger.warning(f"{model.name}: no steady states found at mu={mu:g}")
    else:
        logger.debug(f"{model.name}: {len(states)} steady state(s) at mu={mu:g}")
    return states


def polish(model: ModelSpec, u: float, v: float, mu: float) -> SteadyState:
    """Newton from a single guess; raises when it does not converge"""
    X, norm, converged = solve_batch(model, [[u, v]], mu)
    if not converged[0]:
        raise NumericalError(
            f"{model.name}: Newton did not converge from ({u:g}, {v:g}) at mu={mu:g} (residual {norm[0]:.3g})")
    return SteadyState(float(X[0, 0]), float(X[0, 1]), float(mu), float(norm[0]))


def branch_tangent(model: ModelSpec, state: SteadyState) -> Optional[np.ndarray]:
    """dU*/dμ = -M⁻¹ ∂_μ(f, g), or None where M is singular"""
    jet = model.jet
    M = jet.jacobian(state.u_star, state.v_star, state.mu)
    F_mu = jet.mu_derivative(state.u_star, state.v_star, state.mu)
    if not np.all(np.isfinite(M)) or abs(np.linalg.det(M)) < 1e-14 * max(1.0, np.abs(M).max() ** 2):
        return None
    return -np.linalg.solve(M, F_mu)


def continue_branch(model: ModelSpec, start: SteadyState, mu_new: float,
                    max_halvings: int = 10) -> SteadyState:
    """Follow the branch through ``start`` to ``mu_new`` with tangent predictor and Newton corrector"""
    if mu_new == start.mu:
        return start

    current = start
    step = mu_new - start.mu
    min_step = abs(step) / 2 ** max_halvings
    direction = math.copysign(1.0, step)

    for _ in range(10_000):
        remaining = mu_new - current.mu
        if abs(step) > abs(remaining):
            step = remaining
        trial_mu = mu_new if step == remaining else current.mu + step

        tangent = branch_tangent(model, current)
        predicted = current.state + (tangent * (trial_mu - current.mu) if tangent is not None else 0.0)
        X, norm, converged = solve_batch(model, predicted, trial_mu)
        corrected = X[0]

        tiny = 1e-9 * (1.0 + float(np.hypot(*current.state)))
        predictor_move = float(np.hypot(*(predicted - current.state)))
        if tangent is None:
            within = np.hypot(*(corrected - current.state)) <= 0.1 * (1.0 + np.hypot(*current.state))
        else:
            within = (np.hypot(*(corrected - predicted)) <= 0.5 * predictor_move + tiny
                      and np.hypot(*(corrected - current.state)) <= 2.0 * predictor_move + tiny)

        if converged[0] and within:
            current = SteadyState(float(corrected[0]), float(corrected[1]), float(trial_mu), float(norm[0]))
            if trial_mu == mu_new:
                return current
            step = direction * min(2.0 * abs(step), abs(mu_new - current.mu))
        else:
            step *= 0.5
            if abs(step) < min_step:
                raise BranchEndError(
                    f"{model.name}: branch ends near mu={current.mu:.10g} while continuing to mu={mu_new:g}",
                    last_state=current)

    raise BranchEndError(f"{model.name}: continuation to mu={mu_new:g} did not finish", last_state=current)
