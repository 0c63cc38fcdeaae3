"""
Turing points: repeated negative roots of σ(λ; μ) = det(λI - M(μ))

At a Turing point 4 f_v g_u + (f_u - g_v)² = 0, the repeated root is -k² with
k² = -(f_u + g_v)/2 > 0, and on one side of μ* the roots leave the real axis.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from equilibria import (BranchEndError, SteadyState, continue_branch, default_seeds,
                        polish, solve_batch, DEDUP_DISTANCE, NEGATIVE_TOL, RESIDUAL_TOL)
from model import ModelSpec
from utils import NumericalError, UsageError, get_logger

logger = get_logger('turing')

SIDE_STEP_REL = 1e-4
MAX_SIDE_HALVINGS = 40
DISCRIMINANT_TOL = 1e-12
DISCRIMINANT_RESIDUAL_MAX = 1e-9
AUGMENTED_MAX_ITER = 50


class NotATuringPointError(NumericalError):
    pass


class BelyakovDevaneyError(NotATuringPointError):
    """Repeated root of σ is positive: a Belyakov-Devaney point, not a Turing point"""
    pass


class TuringSearchError(NumericalError):
    pass


@dataclass(frozen=True)
class TuringPoint:
    state: SteadyState
    k: float
    discriminant_residual: float
    eps_side: int
    side_delta: float

    @property
    def mu(self) -> float:
        return self.state.mu

    @property
    def u_star(self) -> float:
        return self.state.u_star

    @property
    def v_star(self) -> float:
        return self.state.v_star

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / self.k

    def __str__(self) -> str:
        return f"Turing point {self.state}, k={self.k:.6g}, eps_side={self.eps_side:+d}"


def _jacobian(model: ModelSpec, state: SteadyState) -> np.ndarray:
    return np.asarray(model.jet.jacobian(state.u_star, state.v_star, state.mu), dtype=float)


def discriminant(model: ModelSpec, state: SteadyState) -> float:
    """4 f_v g_u + (f_u - g_v)²; zero where σ has a repeated root"""
    M = _jacobian(model, state)
    return float(4.0 * M[0, 1] * M[1, 0] + (M[0, 0] - M[1, 1]) ** 2)


def _discriminant_scale(M: np.ndarray) -> float:
    return max((abs(M[0, 0]) + abs(M[1, 1])) ** 2 + 4.0 * abs(M[0, 1] * M[1, 0]), 1e-300)


def sigma(model: ModelSpec, state: SteadyState, lam: complex) -> complex:
    """σ(λ) = (λ - f_u)(λ - g_v) - f_v g_u"""
    M = _jacobian(model, state)
    value = (lam - M[0, 0]) * (lam - M[1, 1]) - M[0, 1] * M[1, 0]
    return value if isinstance(lam, complex) else float(value)


def _root_class(model: ModelSpec, state: SteadyState) -> str:
    M = _jacobian(model, state)
    disc = 4.0 * M[0, 1] * M[1, 0] + (M[0, 0] - M[1, 1]) ** 2
    tol = DISCRIMINANT_TOL * _discriminant_scale(M)
    if disc < -tol:
        return 'complex'
    if disc > tol:
        trace = M[0, 0] + M[1, 1]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        return 'real_negative' if trace < 0 and det > 0 else 'real_other'
    return 'ambiguous'


def _augmented(model: ModelSpec, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """(f, g, Δ), its Jacobian in (u, v, μ), and the Δ scale"""
    u, v, mu = x
    jet = model.jet

    def d(component, n_u, n_v, n_mu):
        return float(jet((component, n_u, n_v, n_mu), u, v, mu))

    f_u, f_v, g_u, g_v = d('f', 1, 0, 0), d('f', 0, 1, 0), d('g', 1, 0, 0), d('g', 0, 1, 0)
    grad = {}
    for name, (a, b, c) in {'u': (1, 0, 0), 'v': (0, 1, 0), 'mu': (0, 0, 1)}.items():
        grad[name] = (
            d('f', 1 + a, b, c), d('f', a, 1 + b, c), d('g', 1 + a, b, c), d('g', a, 1 + b, c)
        )
    G = np.array([d('f', 0, 0, 0), d('g', 0, 0, 0),
                  4.0 * f_v * g_u + (f_u - g_v) ** 2])
    J = np.empty((3, 3))
    for col, name in enumerate(('u', 'v', 'mu')):
        f_ux, f_vx, g_ux, g_vx = grad[name]
        J[0, col] = (f_u, f_v, d('f', 0, 0, 1))[col]
        J[1, col] = (g_u, g_v, d('g', 0, 0, 1))[col]
        J[2, col] = 4.0 * (f_vx * g_u + f_v * g_ux) + 2.0 * (f_u - g_v) * (f_ux - g_vx)
    scale = _discriminant_scale(np.array([[f_u, f_v], [g_u, g_v]]))
    return G, J, scale


def _augmented_newton(model: ModelSpec, mu_guess: float, state_guess: Sequence[float]) -> Optional[np.ndarray]:
    """Newton on (f, g, Δ) = 0 in (u, v, μ); None when it fails"""
    x = np.array([state_guess[0], state_guess[1], mu_guess], dtype=float)

    def merit(G, scale):
        return max(abs(G[0]), abs(G[1]), abs(G[2]) / scale)

    with np.errstate(all='ignore'):
        try:
            G, J, scale = _augmented(model, x)
        except (ValueError, OverflowError):
            return None
        current = merit(G, scale)
        for _ in range(AUGMENTED_MAX_ITER):
            if not math.isfinite(current):
                return None
            if current < 1e-15:
                break
            try:
                step = np.linalg.solve(J, -G)
            except np.linalg.LinAlgError:
                return None
            t = 1.0
            for _ in range(12):
                trial = x + t * step
                G_t, J_t, scale_t = _augmented(model, trial)
                value = merit(G_t, scale_t)
                if np.all(np.isfinite(G_t)) and value < current:
                    x, G, J, scale, current = trial, G_t, J_t, scale_t, value
                    break
                t *= 0.5
            else:
                break

    if max(abs(G[0]), abs(G[1])) < RESIDUAL_TOL and abs(G[2]) < DISCRIMINANT_RESIDUAL_MAX:
        return x
    return None


def _bracket_search(model: ModelSpec, mu_guess: float, state_guess: Sequence[float]) -> SteadyState:
    """Root of Δ along the continued branch, brackets expanding geometrically from the guess"""
    start = polish(model, state_guess[0], state_guess[1], mu_guess)
    d0 = discriminant(model, start)
    if d0 == 0.0:
        return start

    bracket = None
    for side in (1.0, -1.0):
        previous = start
        delta = 1e-3 * max(1.0, abs(mu_guess))
        for _ in range(30):
            try:
                state = continue_branch(model, previous, mu_guess + side * delta)
            except BranchEndError:
                break
            if np.sign(discriminant(model, state)) != np.sign(d0):
                bracket = (previous, state)
                break
            previous = state
            delta *= 2.0
        if bracket:
            break

    if bracket is None:
        raise TuringSearchError(
            f"{model.name}: no sign change of the discriminant found in bracket around mu={mu_guess:g}")

    anchor = bracket[0]

    def along_branch(mu: float) -> float:
        return discriminant(model, continue_branch(model, anchor, mu))

    a, b = sorted((bracket[0].mu, bracket[1].mu))
    mu_root = brentq(along_branch, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return continue_branch(model, anchor, mu_root)


def _bifurcation_side(model: ModelSpec, state: SteadyState) -> Tuple[int, float]:
    """eps_side from steps to both sides of μ; δ halves while a step falls off the branch"""
    delta = SIDE_STEP_REL * max(1.0, abs(state.mu))
    for _ in range(MAX_SIDE_HALVINGS):
        try:
            plus = continue_branch(model, state, state.mu + delta)
            minus = continue_branch(model, state, state.mu - delta)
        except BranchEndError:
            delta *= 0.5
            continue
        upper, lower = _root_class(model, plus), _root_class(model, minus)
        if upper == 'complex' and lower == 'real_negative':
            return 1, delta
        if lower == 'complex' and upper == 'real_negative':
            return -1, delta
        raise NotATuringPointError(
            f"{model.name}: no transversal crossing at mu={state.mu:.10g} "
            f"(roots {lower} below, {upper} above)")
    raise NotATuringPointError(f"{model.name}: side steps left the branch at every δ near mu={state.mu:.10g}")


def classify_turing_point(model: ModelSpec, state: SteadyState) -> TuringPoint:
    """Validate a repeated-root state and build its TuringPoint"""
    M = _jacobian(model, state)
    disc = float(4.0 * M[0, 1] * M[1, 0] + (M[0, 0] - M[1, 1]) ** 2)
    if abs(disc) >= DISCRIMINANT_RESIDUAL_MAX:
        raise TuringSearchError(f"{model.name}: discriminant residual {disc:.3g} too large at {state}")
    trace = M[0, 0] + M[1, 1]
    k2 = -0.5 * trace
    tol = 1e-12 * max(1.0, abs(M[0, 0]) + abs(M[1, 1]))
    if k2 <= tol:
        if -k2 > tol:
            raise BelyakovDevaneyError(
                f"{model.name}: repeated positive root λ={-k2:.6g} at {state} (Belyakov-Devaney point)")
        raise NotATuringPointError(f"{model.name}: k² = {k2:.3g} ≤ 0 at {state}; not a Turing point")
    eps_side, delta = _bifurcation_side(model, state)
    return TuringPoint(state=state, k=math.sqrt(k2), discriminant_residual=disc,
                       eps_side=eps_side, side_delta=delta)


def find_turing_point(model: ModelSpec, mu_guess: float, state_guess: Sequence[float]) -> TuringPoint:
    """Turing point near (u, v, μ) guesses"""
    x = _augmented_newton(model, mu_guess, state_guess)
    if x is not None:
        state = polish(model, x[0], x[1], x[2])
    else:
        logger.debug(f"{model.name}: augmented Newton failed from mu={mu_guess:g}; bracketing along branch")
        state = _bracket_search(model, mu_guess, state_guess)
    tp = classify_turing_point(model, state)
    logger.info(f"{model.name}: {tp}")
    return tp


def dispersion_matrix(model: ModelSpec, state: SteadyState, k_perturb) -> np.ndarray:
    """-k²D + ∂F for the time-dependent system, shape (..., 2, 2)

    D = [[1, 0], [-D_v β, D_v]] and F = (-f̂, -ĝ).
    """
    M = _jacobian(model, state)
    D_v, beta = model.D_v, model.beta
    # ĝ = D_v (g - β f)
    JF = -np.array([[M[0, 0], M[0, 1]],
                    [D_v * (M[1, 0] - beta * M[0, 0]), D_v * (M[1, 1] - beta * M[0, 1])]])
    k2 = np.asarray(k_perturb, dtype=float)[..., np.newaxis, np.newaxis] ** 2
    D = np.array([[1.0, 0.0], [-D_v * beta, D_v]])
    return -k2 * D + JF


def growth_rates(model: ModelSpec, state: SteadyState, k_perturb) -> np.ndarray:
    """Roots ω of det(-k²D + ∂F - ωI), largest real part first

    Accepts a scalar or an array of wave numbers; the root axis is last.
    """
    A = dispersion_matrix(model, state, k_perturb)
    a, b, c, d = A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1]
    half_trace = 0.5 * (a + d)
    root = np.sqrt(np.asarray(0.25 * (a - d) ** 2 + b * c, dtype=complex))
    omega = np.stack([half_trace + root, half_trace - root], axis=-1)
    order = np.argsort(-omega.real, axis=-1)
    return np.take_along_axis(omega, order, axis=-1)


def dispersion_curve(model: ModelSpec, state: SteadyState, k_max: float,
                     n: int = 200) -> Tuple[np.ndarray, np.ndarray]:
    """(k, max Re ω) on a uniform grid in (0, k_max]"""
    ks = np.linspace(k_max / n, k_max, n)
    return ks, growth_rates(model, state, ks)[:, 0].real


def _states_by_mu(model: ModelSpec, mus: np.ndarray, seeds: np.ndarray) -> List[List[SteadyState]]:
    S = seeds.shape[0]
    X, norm, converged = solve_batch(model, np.tile(seeds, (mus.size, 1)), np.repeat(mus, S))
    result = []
    for i, mu in enumerate(mus):
        block = slice(i * S, (i + 1) * S)
        kept: List[SteadyState] = []
        for (u, v), residual, ok in zip(X[block], norm[block], converged[block]):
            if not ok or u < -NEGATIVE_TOL or v < -NEGATIVE_TOL:
                continue
            candidate = SteadyState(float(u), float(v), float(mu), float(residual))
            scale = max(1.0, math.hypot(u, v))
            if all(candidate.distance(other) > DEDUP_DISTANCE * scale for other in kept):
                kept.append(candidate)
        result.append(kept)
    return result


def _nearest(state: SteadyState, others: List[SteadyState]) -> Optional[SteadyState]:
    if not others:
        return None
    return min(others, key=state.distance)


def _fold_guess(model: ModelSpec, state: SteadyState, mu_target: float) -> Optional[SteadyState]:
    try:
        continue_branch(model, state, mu_target)
    except BranchEndError as exc:
        return exc.last_state
    return None


def scan_turing_points(model: ModelSpec, mu_range: Tuple[float, float], n_mu: int = 64,
                       seeds: Optional[np.ndarray] = None) -> List[TuringPoint]:
    """All Turing points found in a μ-interval, without a guess

    Discriminant sign changes between linked states on neighbouring μ samples and
    branches that appear or vanish between samples (folds) give candidates, which
    are refined with :func:`find_turing_point`.
    """
    lo, hi = mu_range
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise UsageError(f"invalid mu range {mu_range}")
    mus = np.linspace(lo, hi, n_mu)
    seeds = default_seeds(n=6) if seeds is None else np.asarray(seeds, dtype=float).reshape(-1, 2)
    layers = _states_by_mu(model, mus, seeds)
    discs = [[discriminant(model, s) for s in layer] for layer in layers]

    candidates: List[Tuple[float, float, float]] = []
    for i in range(n_mu - 1):
        here, there = layers[i], layers[i + 1]
        matched = set()
        for a, d_a in zip(here, discs[i]):
            b = _nearest(a, there)
            link_tol = 0.1 * (1.0 + math.hypot(a.u_star, a.v_star))
            if b is not None and a.distance(b) <= link_tol and _nearest(b, here) is a:
                j = there.index(b)
                matched.add(j)
                d_b = discs[i + 1][j]
                if np.sign(d_a) != np.sign(d_b):
                    t = d_a / (d_a - d_b)
                    candidates.append((a.mu + t * (b.mu - a.mu),
                                       a.u_star + t * (b.u_star - a.u_star),
                                       a.v_star + t * (b.v_star - a.v_star)))
            else:
                last = _fold_guess(model, a, there[0].mu if there else mus[i + 1])
                if last is not None:
                    candidates.append((last.mu, last.u_star, last.v_star))
        for j, b in enumerate(there):
            if j not in matched:
                last = _fold_guess(model, b, mus[i])
                if last is not None:
                    candidates.append((last.mu, last.u_star, last.v_star))

    found: List[TuringPoint] = []
    for mu, u, v in candidates:
        try:
            tp = find_turing_point(model, mu, (u, v))
        except NumericalError as exc:
            logger.debug(f"{model.name}: candidate mu={mu:.6g} rejected: {exc}")
            continue
        duplicate = any(abs(tp.mu - other.mu) < 1e-8 * max(1.0, abs(tp.mu))
                        and tp.state.distance(other.state) < 1e-6 for other in found)
        if not duplicate:
            found.append(tp)
    found.sort(key=lambda tp: tp.mu)
    logger.info(f"{model.name}: {len(found)} Turing point(s) in mu range [{lo:g}, {hi:g}]")
    return found
