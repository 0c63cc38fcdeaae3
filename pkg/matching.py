"""
Algebraic matching conditions for dihedral coefficient sequences

Spot A (quadratic)::

    a_n = 2 Σ_{j=1}^{N-n} cos(mπ(n-j)/3) a_j a_{n+j} + Σ_{j=0}^{n} cos(mπ(n-2j)/3) a_j a_{n-j}

Ring (cubic)::

    b_n = Σ_{i+j+k=n, |i|,|j|,|k|≤N} (-1)^{m(|i|+|j|-|k|-n)/2} b_|i| b_|j| b_|k|
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from utils import NumericalError, UsageError, get_logger

logger = get_logger('matching')

SPOT_A = 'spotA'
RING = 'ring'
KINDS = (SPOT_A, RING)

NEWTON_MAX_ITER = 100
RESIDUAL_TARGET = 1e-12
RESIDUAL_ACCEPT = 1e-10
MIN_SINGULAR_VALUE = 1e-8
ZERO_SOLUTION = 1e-8
DEDUP_DISTANCE = 1e-6

# cos(π t / 3) for t mod 6
_COS_SIXTHS = (1.0, 0.5, -0.5, -1.0, -0.5, 0.5)

REFERENCE_SETS: Dict[str, Tuple[int, int, Tuple[float, ...]]] = {
    'hexagon': (6, 2, (0.311, 0.267, 0.189)),
    'square': (4, 5, (-0.136, 0.262, 0.236, -0.114, 0.187, 0.145)),
    'pentagon': (5, 3, (-0.382, 0.300, 0.382, 0.486)),
}


class MatchingError(NumericalError):
    pass


@dataclass(frozen=True)
class MatchingSolution:
    m: int
    N: int
    kind: str
    coeffs: Tuple[float, ...]
    residual: float
    jac_min_sv: float

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs)


def _check(m: int, N: int, coeffs) -> np.ndarray:
    if m < 1 or N < 0:
        raise UsageError(f"need m >= 1 and N >= 0 (got m={m}, N={N})")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (N + 1,):
        raise UsageError(f"expected {N + 1} coefficients, got {coeffs.size}")
    return coeffs


def dihedral_cosine(m: int, t: int) -> float:
    """cos(mπt/3) from exact integer arithmetic"""
    return _COS_SIXTHS[(m * t) % 6]


@lru_cache(maxsize=None)
def _spotA_terms(m: int, N: int) -> Tuple[Tuple[Tuple[float, int, int], ...], ...]:
    """Per equation n: (weight, p, q) with contribution weight·a_p·a_q"""
    terms = []
    for n in range(N + 1):
        row = []
        for j in range(1, N - n + 1):
            row.append((2.0 * dihedral_cosine(m, n - j), j, n + j))
        for j in range(n + 1):
            row.append((dihedral_cosine(m, n - 2 * j), j, n - j))
        terms.append(tuple(row))
    return tuple(terms)


@lru_cache(maxsize=None)
def _ring_terms(m: int, N: int) -> Tuple[Tuple[Tuple[float, int, int, int], ...], ...]:
    """Per equation n: (sign, |i|, |j|, |k|) over signed i + j + k = n"""
    terms = []
    for n in range(N + 1):
        row = []
        for i in range(-N, N + 1):
            for j in range(-N, N + 1):
                k = n - i - j
                if abs(k) > N:
                    continue
                # |x| and x share parity, so twice is even whenever i + j + k = n
                twice = m * (abs(i) + abs(j) - abs(k) - n)
                assert twice % 2 == 0, f"non-integer sign exponent for m={m}, (i, j, k)={(i, j, k)}, n={n}"
                sign = -1.0 if (twice // 2) % 2 else 1.0
                row.append((sign, abs(i), abs(j), abs(k)))
        terms.append(tuple(row))
    return tuple(terms)


def spotA_residual(m: int, N: int, coeffs) -> np.ndarray:
    a = _check(m, N, coeffs)
    residual = a.copy()
    for n, row in enumerate(_spotA_terms(m, N)):
        for weight, p, q in row:
            residual[n] -= weight * a[p] * a[q]
    return residual


def spotA_jacobian(m: int, N: int, coeffs) -> np.ndarray:
    a = _check(m, N, coeffs)
    J = np.eye(N + 1)
    for n, row in enumerate(_spotA_terms(m, N)):
        for weight, p, q in row:
            J[n, p] -= weight * a[q]
            J[n, q] -= weight * a[p]
    return J


def ring_residual(m: int, N: int, coeffs) -> np.ndarray:
    b = _check(m, N, coeffs)
    residual = b.copy()
    for n, row in enumerate(_ring_terms(m, N)):
        for sign, p, q, r in row:
            residual[n] -= sign * b[p] * b[q] * b[r]
    return residual


def ring_jacobian(m: int, N: int, coeffs) -> np.ndarray:
    b = _check(m, N, coeffs)
    J = np.eye(N + 1)
    for n, row in enumerate(_ring_terms(m, N)):
        for sign, p, q, r in row:
            J[n, p] -= sign * b[q] * b[r]
            J[n, q] -= sign * b[p] * b[r]
            J[n, r] -= sign * b[p] * b[q]
    return J


_SYSTEMS = {
    SPOT_A: (spotA_residual, spotA_jacobian),
    RING: (ring_residual, ring_jacobian),
}


def _newton(kind: str, m: int, N: int, initial) -> MatchingSolution:
    if kind not in _SYSTEMS:
        raise UsageError(f"unknown matching kind '{kind}' (expected one of {KINDS})")
    residual_fn, jacobian_fn = _SYSTEMS[kind]
    x = _check(m, N, initial).copy()
    r = residual_fn(m, N, x)
    norm = float(np.max(np.abs(r)))

    for _ in range(NEWTON_MAX_ITER):
        if norm < RESIDUAL_TARGET:
            break
        try:
            step = np.linalg.solve(jacobian_fn(m, N, x), -r)
        except np.linalg.LinAlgError:
            raise MatchingError(f"{kind} m={m} N={N}: singular Jacobian during Newton")
        t = 1.0
        for _ in range(20):
            trial = x + t * step
            r_trial = residual_fn(m, N, trial)
            trial_norm = float(np.max(np.abs(r_trial)))
            if np.isfinite(trial_norm) and trial_norm < norm:
                x, r, norm = trial, r_trial, trial_norm
                break
            t *= 0.5
        else:
            break

    if not norm < RESIDUAL_ACCEPT:
        raise MatchingError(f"{kind} m={m} N={N}: Newton did not converge (residual {norm:.3g})")
    if float(np.max(np.abs(x))) < ZERO_SOLUTION:
        raise MatchingError(f"{kind} m={m} N={N}: converged to the trivial solution")
    min_sv = float(np.linalg.svd(jacobian_fn(m, N, x), compute_uv=False).min())
    if min_sv <= MIN_SINGULAR_VALUE:
        raise MatchingError(f"{kind} m={m} N={N}: degenerate solution (min singular value {min_sv:.3g})")
    return MatchingSolution(m=m, N=N, kind=kind, coeffs=tuple(float(value) for value in x),
                            residual=norm, jac_min_sv=min_sv)


def solve_spotA(m: int, N: int, initial) -> MatchingSolution:
    return _newton(SPOT_A, m, N, initial)


def solve_ring(m: int, N: int, initial) -> MatchingSolution:
    return _newton(RING, m, N, initial)


def solve(kind: str, m: int, N: int, initial) -> MatchingSolution:
    return _newton(kind, m, N, initial)


def _canonical(solution: MatchingSolution) -> MatchingSolution:
    """Ring solutions come in ±b pairs; keep the one whose first nonzero entry is positive"""
    if solution.kind != RING:
        return solution
    for value in solution.coeffs:
        if abs(value) > ZERO_SOLUTION:
            if value < 0:
                return MatchingSolution(solution.m, solution.N, solution.kind,
                                        tuple(-c for c in solution.coeffs),
                                        solution.residual, solution.jac_min_sv)
            break
    return solution


def multistart(kind: str, m: int, N: int, trials: int, rng_seed: int,
               workers: int = 1) -> List[MatchingSolution]:
    """Distinct nondegenerate solutions from uniform random starts in [-1, 1]"""
    if kind not in _SYSTEMS:
        raise UsageError(f"unknown matching kind '{kind}' (expected one of {KINDS})")
    if trials < 1:
        raise UsageError(f"trials must be at least 1 (got {trials})")
    _check(m, N, np.zeros(N + 1))
    streams = np.random.SeedSequence(rng_seed).spawn(trials)

    def attempt(stream) -> Optional[MatchingSolution]:
        initial = np.random.default_rng(stream).uniform(-1.0, 1.0, N + 1)
        try:
            return _canonical(_newton(kind, m, N, initial))
        except MatchingError:
            return None

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        found = [solution for solution in pool.map(attempt, streams) if solution is not None]

    distinct: List[MatchingSolution] = []
    for solution in sorted(found, key=lambda s: s.coeffs):
        if all(np.max(np.abs(solution.as_array() - other.as_array())) > DEDUP_DISTANCE for other in distinct):
            distinct.append(solution)
    logger.info(f"{kind} m={m} N={N}: {len(found)} of {trials} starts converged, {len(distinct)} distinct")
    return distinct


def reference_solution(name: str) -> MatchingSolution:
    """Polish one of the tabulated spot-A coefficient sets"""
    if name not in REFERENCE_SETS:
        raise UsageError(f"unknown coefficient set '{name}' (available: {', '.join(REFERENCE_SETS)})")
    m, N, coeffs = REFERENCE_SETS[name]
    return solve_spotA(m, N, coeffs)


def from_coefficients(kind: str, m: int, N: int, coeffs) -> MatchingSolution:
    """Wrap recorded coefficients without moving them; residual and conditioning are recomputed"""
    if kind not in _SYSTEMS:
        raise UsageError(f"unknown matching kind '{kind}' (expected one of {KINDS})")
    residual_fn, jacobian_fn = _SYSTEMS[kind]
    x = _check(m, N, coeffs)
    norm = float(np.max(np.abs(residual_fn(m, N, x))))
    if not norm < RESIDUAL_ACCEPT:
        raise MatchingError(f"{kind} m={m} N={N}: recorded coefficients have residual {norm:.3g}")
    min_sv = float(np.linalg.svd(jacobian_fn(m, N, x), compute_uv=False).min())
    return MatchingSolution(m=m, N=N, kind=kind, coeffs=tuple(float(value) for value in x),
                            residual=norm, jac_min_sv=min_sv)
