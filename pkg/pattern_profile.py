"""
Localised dihedral initial profiles on a square grid, and diagnostics for the patterns they grow into

Polar coordinates are measured from the domain centre. Axis 0 of every field
runs along x, axis 1 along y.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from bessel import bessel_j
from localform import LocalForm, Predictors
from matching import RING, SPOT_A, MatchingSolution
from turing import TuringPoint
from utils import UsageError, get_logger

logger = get_logger('pattern_profile')

GAP_THRESHOLD_REL = 0.2
PATTERN_THRESHOLD_REL = 1e-2


class RingExistenceError(UsageError):
    """Ring profiles need P4 < 0"""
    pass


@dataclass
class Field2D:
    n_grid: int
    L: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.n_grid < 2 or not (self.L > 0):
            raise UsageError(f"invalid grid: n_grid={self.n_grid}, L={self.L}")
        shape = (self.n_grid, self.n_grid)
        if self.u.shape != shape or self.v.shape != shape:
            raise UsageError(f"field arrays must have shape {shape}")

    @property
    def h(self) -> float:
        return self.L / (self.n_grid - 1)

    @property
    def coordinates(self) -> np.ndarray:
        return np.linspace(-0.5 * self.L, 0.5 * self.L, self.n_grid)

    def polar(self) -> Tuple[np.ndarray, np.ndarray]:
        return polar_grid(self.n_grid, self.L)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))

    def copy(self) -> 'Field2D':
        return Field2D(self.n_grid, self.L, self.u.copy(), self.v.copy())

    @classmethod
    def uniform(cls, n_grid: int, L: float, u: float, v: float) -> 'Field2D':
        shape = (n_grid, n_grid)
        return cls(n_grid, L, np.full(shape, float(u)), np.full(shape, float(v)))


@dataclass(frozen=True)
class PatternSpec:
    kind: str
    matching: MatchingSolution
    eps: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in (SPOT_A, RING):
            raise UsageError(f"unknown pattern kind '{self.kind}'")
        if self.matching.kind != self.kind:
            raise UsageError(f"{self.kind} pattern given {self.matching.kind} matching coefficients")
        if not (self.amplitude > 0 and math.isfinite(self.amplitude)):
            raise UsageError(f"amplitude must be positive (got {self.amplitude})")
        if not (math.isfinite(self.eps) and self.eps != 0.0):
            raise UsageError(f"eps must be finite and nonzero (got {self.eps})")


def polar_grid(n_grid: int, L: float) -> Tuple[np.ndarray, np.ndarray]:
    xs = np.linspace(-0.5 * L, 0.5 * L, n_grid)
    X, Y = np.meshgrid(xs, xs, indexing='ij')
    return np.hypot(X, Y), np.arctan2(Y, X)


def _require_bifurcation_side(c0: float, eps: float):
    if not c0 * eps > 0:
        raise UsageError(f"P1·eps must be positive (P1={c0:.4g}, eps={eps:.4g})")


def spotA_field(tp: TuringPoint, pred: Predictors, spec: PatternSpec, n_grid: int, L: float) -> Field2D:
    """(u*, v*) + C·P3·S(r, θ)·exp(-sqrt(P1 ε) r)·(1, P2)"""
    if spec.kind != SPOT_A:
        raise UsageError(f"spotA_field needs a spot A pattern, got {spec.kind}")
    _require_bifurcation_side(pred.P1, spec.eps)
    m, coeffs = spec.matching.m, spec.matching.coeffs
    r, theta = polar_grid(n_grid, L)
    kr = tp.k * r

    S = coeffs[0] * bessel_j(0, kr)
    for n in range(1, len(coeffs)):
        S = S + 2.0 * coeffs[n] * bessel_j(m * n, kr) * np.cos(m * n * theta)

    deviation = spec.amplitude * pred.P3 * S * np.exp(-math.sqrt(pred.P1 * spec.eps) * r)
    logger.debug(f"spot A field: m={m}, N={len(coeffs) - 1}, n_grid={n_grid}, L={L:g}, "
                 f"centre deviation {float(deviation[n_grid // 2, n_grid // 2]):.4g}")
    return Field2D(n_grid, L, tp.u_star + deviation, tp.v_star + pred.P2 * deviation)


def ring_field(tp: TuringPoint, lf: LocalForm, spec: PatternSpec, n_grid: int, L: float,
               force: bool = False) -> Field2D:
    """Leading-order ring profile with the spot A exponential envelope"""
    if spec.kind != RING:
        raise UsageError(f"ring_field needs a ring pattern, got {spec.kind}")
    if lf.c3 >= 0:
        if not force:
            raise RingExistenceError(f"ring profiles require P4 < 0 (P4={lf.c3:.4g})")
        logger.warning(f"building ring profile with P4={lf.c3:.4g} >= 0")
    _require_bifurcation_side(lf.c0, spec.eps)

    m, coeffs = spec.matching.m, spec.matching.coeffs
    N = len(coeffs) - 1
    r, theta = polar_grid(n_grid, L)
    kr = tp.k * r

    along_U0 = np.zeros_like(r)
    along_U1 = np.zeros_like(r)
    for n in range(-N, N + 1):
        angular = coeffs[abs(n)] * np.cos(m * n * theta)
        along_U0 += angular * kr * bessel_j(abs(m * n + 1), kr)
        along_U1 += angular * 2.0 * bessel_j(abs(m * n), kr)

    scale = spec.amplitude * (lf.c0 * spec.eps) ** 0.75 * np.exp(-math.sqrt(lf.c0 * spec.eps) * r)
    u = tp.u_star + scale * (along_U0 * lf.U0[0] + along_U1 * lf.U1[0])
    v = tp.v_star + scale * (along_U0 * lf.U0[1] + along_U1 * lf.U1[1])
    return Field2D(n_grid, L, u, v)


def dihedral_symmetry_error(field: Field2D, m: int, order: int = 1) -> float:
    """Largest deviation from rotation by 2π/m and reflection θ -> -θ

    Samples are the grid nodes inside the inscribed disc; rotated positions are
    sampled by spline interpolation of the given order (1 is bilinear),
    reflections are exact grid flips.
    """
    if m < 1:
        raise UsageError(f"dihedral index must be positive (got {m})")
    if order not in (1, 3):
        raise UsageError(f"interpolation order must be 1 or 3 (got {order})")
    xs = field.coordinates
    X, Y = np.meshgrid(xs, xs, indexing='ij')
    inside = np.hypot(X, Y) <= 0.5 * field.L
    px, py = X[inside], Y[inside]

    phi = 2.0 * math.pi / m
    rx = px * math.cos(phi) - py * math.sin(phi)
    ry = px * math.sin(phi) + py * math.cos(phi)
    last = field.n_grid - 1
    index = np.vstack([np.clip((rx - xs[0]) / field.h, 0, last),
                       np.clip((ry - xs[0]) / field.h, 0, last)])

    error = 0.0
    for component in (field.u, field.v):
        samples = component[inside]
        rotated = ndimage.map_coordinates(component, index, order=order, mode='nearest')
        reflected = component[:, ::-1][inside]
        error = max(error, float(np.max(np.abs(samples - rotated))), float(np.max(np.abs(samples - reflected))))
    return error


def pattern_amplitude(field: Field2D, tp: TuringPoint) -> float:
    return float(max(np.max(np.abs(field.u - tp.u_star)), np.max(np.abs(field.v - tp.v_star))))


def pattern_correlation(field: Field2D, u_star: float, v_star: float,
                        threshold: Optional[float] = None) -> float:
    """Normalised correlation of (u - u*) and (v - v*) over the patterned region"""
    du = field.u - u_star
    dv = field.v - v_star
    if threshold is None:
        threshold = PATTERN_THRESHOLD_REL * float(np.max(np.abs(du)))
    region = np.abs(du) > threshold
    if not region.any():
        return 0.0
    a, b = du[region], dv[region]
    denominator = math.sqrt(float(np.sum(a * a)) * float(np.sum(b * b)))
    return float(np.sum(a * b)) / denominator if denominator > 0 else 0.0


def _feature_mask(field: Field2D, u_star: float, below: bool, threshold: Optional[float]) -> np.ndarray:
    du = field.u - u_star
    if threshold is None:
        threshold = GAP_THRESHOLD_REL * float(np.max(np.abs(du)))
    return du < -threshold if below else du > threshold


def count_gaps(field: Field2D, u_star: float, threshold: Optional[float] = None) -> int:
    """Connected regions where u sits below u*"""
    _, count = ndimage.label(_feature_mask(field, u_star, True, threshold))
    return int(count)


def count_peaks(field: Field2D, u_star: float, threshold: Optional[float] = None) -> int:
    _, count = ndimage.label(_feature_mask(field, u_star, False, threshold))
    return int(count)


def pattern_radius(field: Field2D, u_star: float, below: bool = True,
                   threshold: Optional[float] = None) -> float:
    """Distance from the centre to the outermost patterned pixel"""
    mask = _feature_mask(field, u_star, below, threshold)
    if not mask.any():
        return 0.0
    r, _ = field.polar()
    return float(r[mask].max())
