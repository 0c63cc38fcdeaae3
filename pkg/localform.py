"""
Local normal-form data at a Turing point

With U = u - U*(μ* + ε) the steady problem reads

    0 = ΔU - M1 U - ε M2 U - Q(U, U) - C(U, U, U) + h.o.t.

Q and C are stored as coefficient tensors: ``q[i, a, b] = ½ ∂_a∂_b F_i`` and
``c[i, a, b, c] = (1/6) ∂_a∂_b∂_c F_i`` with F = (f, g) and indices 0 = u, 1 = v.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from equilibria import BranchEndError, SteadyState, branch_tangent, continue_branch
from model import ModelSpec
from turing import TuringPoint, find_turing_point, scan_turing_points
from utils import NumericalError, UsageError, get_logger

logger = get_logger('localform')

M2_STEP_REL = 1e-5
RICHARDSON_TOL = 1e-6
GAMMA_TOL = 1e-8

NO_TURING = 0
P4_NEGATIVE = -1
P4_POSITIVE = 1


class DegenerateEigenbasisError(NumericalError):
    pass


class DegenerateQuadraticError(NumericalError):
    """γ vanishes, so P3 is undefined"""
    pass


@dataclass(frozen=True)
class LocalForm:
    M1: np.ndarray
    M2: np.ndarray
    q: np.ndarray
    c: np.ndarray
    U0: np.ndarray
    U1: np.ndarray
    U0d: np.ndarray
    U1d: np.ndarray
    k: float
    gamma: float
    c0: float
    c3: float
    m2_method: str = 'finite-difference'

    def as_dict(self) -> Dict[str, object]:
        return {
            'M1': self.M1.tolist(),
            'M2': self.M2.tolist(),
            'q': self.q.tolist(),
            'c': self.c.tolist(),
            'U0': self.U0.tolist(),
            'U1': self.U1.tolist(),
            'U0d': self.U0d.tolist(),
            'U1d': self.U1d.tolist(),
            'k': self.k,
            'gamma': self.gamma,
            'c0': self.c0,
            'c3': self.c3,
            'm2_method': self.m2_method,
        }


@dataclass(frozen=True)
class Predictors:
    P1: float
    P2: float
    P3: float
    P4: float

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.P1, self.P2, self.P3, self.P4)

    def signs(self) -> Tuple[int, int, int, int]:
        return tuple(int(np.sign(p)) for p in self.as_tuple())

    def __str__(self) -> str:
        return f"P1={self.P1:.4g}, P2={self.P2:.4g}, P3={self.P3:.4g}, P4={self.P4:.4g}"


def bilinear_Q(lf: LocalForm, X, Y) -> np.ndarray:
    return np.einsum('iab,a,b->i', lf.q, np.asarray(X, dtype=float), np.asarray(Y, dtype=float))


def trilinear_C(lf: LocalForm, X, Y, Z) -> np.ndarray:
    return np.einsum('iabc,a,b,c->i', lf.c, np.asarray(X, dtype=float),
                     np.asarray(Y, dtype=float), np.asarray(Z, dtype=float))


def _partial(model: ModelSpec, state: SteadyState, component: str, n_u: int, n_v: int, n_mu: int = 0) -> float:
    return float(model.jet((component, n_u, n_v, n_mu), state.u_star, state.v_star, state.mu))


def _taylor_tensors(model: ModelSpec, state: SteadyState) -> Tuple[np.ndarray, np.ndarray]:
    q = np.empty((2, 2, 2))
    c = np.empty((2, 2, 2, 2))
    for i, component in enumerate(('f', 'g')):
        for a in range(2):
            for b in range(2):
                n_v = a + b
                q[i, a, b] = 0.5 * _partial(model, state, component, 2 - n_v, n_v)
                for d in range(2):
                    n_v3 = n_v + d
                    c[i, a, b, d] = _partial(model, state, component, 3 - n_v3, n_v3) / 6.0
    return q, c


def _branch_jacobian(model: ModelSpec, start: SteadyState, mu: float) -> np.ndarray:
    state = continue_branch(model, start, mu)
    return np.asarray(model.jet.jacobian(state.u_star, state.v_star, state.mu), dtype=float)


def _m2_finite_difference(model: ModelSpec, state: SteadyState) -> np.ndarray:
    """Central difference of M along the branch, Richardson-extrapolated against step 2h"""
    h = M2_STEP_REL * max(1.0, abs(state.mu))
    M = {s: _branch_jacobian(model, state, state.mu + s * h) for s in (-2, -1, 1, 2)}
    d_h = (M[1] - M[-1]) / (2.0 * h)
    d_2h = (M[2] - M[-2]) / (4.0 * h)
    extrapolated = d_h + (d_h - d_2h) / 3.0
    gap = float(np.max(np.abs(d_h - d_2h)))
    if gap > RICHARDSON_TOL * max(1.0, float(np.max(np.abs(extrapolated)))):
        logger.warning(f"{model.name}: M2 Richardson check disagrees by {gap:.3g} at mu={state.mu:.10g}")
    return extrapolated


def _m2_implicit(model: ModelSpec, state: SteadyState) -> np.ndarray:
    """dM/dμ = ∂_μ M + Σ_b ∂_b M dU_b/dμ with the branch tangent"""
    tangent = branch_tangent(model, state)
    if tangent is None:
        raise NumericalError(f"{model.name}: M is singular at {state}; no branch derivative")
    M2 = np.empty((2, 2))
    for i, component in enumerate(('f', 'g')):
        for a in range(2):
            n_u, n_v = (1, 0) if a == 0 else (0, 1)
            M2[i, a] = (_partial(model, state, component, n_u, n_v, 1)
                        + _partial(model, state, component, n_u + 1, n_v) * tangent[0]
                        + _partial(model, state, component, n_u, n_v + 1) * tangent[1])
    return M2


def build_local_form(model: ModelSpec, tp: TuringPoint) -> LocalForm:
    state = tp.state
    M1 = np.asarray(model.jet.jacobian(state.u_star, state.v_star, state.mu), dtype=float)
    f_u, f_v = M1[0, 0], M1[0, 1]
    if f_v == 0.0 or abs(f_v) < 1e-14 * max(1.0, float(np.max(np.abs(M1)))):
        raise DegenerateEigenbasisError(f"{model.name}: f_v = 0 at {state}; dual basis undefined")

    k2 = tp.k ** 2
    U0 = np.array([f_v, -(k2 + f_u)])
    U1 = np.array([0.0, k2])
    U0d = np.array([1.0, 0.0]) / f_v
    U1d = np.array([k2 + f_u, f_v]) / (k2 * f_v)

    try:
        M2 = _m2_finite_difference(model, state)
        method = 'finite-difference'
    except BranchEndError as exc:
        logger.warning(f"{model.name}: M2 stencil left the branch ({exc}); using implicit derivative")
        M2 = _m2_implicit(model, state)
        method = 'implicit'

    q, c = _taylor_tensors(model, state)
    partial = LocalForm(M1=M1, M2=M2, q=q, c=c, U0=U0, U1=U1, U0d=U0d, U1d=U1d, k=tp.k,
                        gamma=0.0, c0=0.0, c3=0.0, m2_method=method)
    Q00 = bilinear_Q(partial, U0, U0)
    Q01 = bilinear_Q(partial, U0, U1)
    C000 = trilinear_C(partial, U0, U0, U0)

    gamma = float(U1d @ Q00)
    c0 = float(U1d @ (-0.25 * M2 @ U0))
    c3 = float(-(5.0 / 6.0 * (U0d @ Q00) + 5.0 / 6.0 * (U1d @ Q01) + 19.0 / 18.0 * gamma) * gamma
               - 0.75 * (U1d @ C000))
    return LocalForm(M1=M1, M2=M2, q=q, c=c, U0=U0, U1=U1, U0d=U0d, U1d=U1d, k=tp.k,
                     gamma=gamma, c0=c0, c3=c3, m2_method=method)


def predictors(lf: LocalForm) -> Predictors:
    Q00 = bilinear_Q(lf, lf.U0, lf.U0)
    if abs(lf.gamma) <= GAMMA_TOL * max(float(np.linalg.norm(Q00)), 1e-300):
        raise DegenerateQuadraticError(f"γ = {lf.gamma:.3g} vanishes; peak/gap predictor undefined")
    return Predictors(
        P1=lf.c0,
        P2=float(lf.U0[1] / lf.U0[0]),
        P3=float(lf.U0[0] / lf.gamma),
        P4=lf.c3,
    )


def interpret(pred: Predictors) -> List[str]:
    """Plain-language reading of the predictor signs"""
    direction = 'ε > 0 (μ > μ*)' if pred.P1 > 0 else 'ε < 0 (μ < μ*)'
    phase = 'in-phase' if pred.P2 > 0 else 'anti-phase'
    polarity = 'peaks' if pred.P3 > 0 else 'gaps'
    sentences = [
        f"P1 = {pred.P1:.4g}: localised patterns bifurcate for {direction}.",
        f"P2 = {pred.P2:.4g}: u and v are {phase}.",
        f"P3 = {pred.P3:.4g}: spot A-type patterns have {polarity} at their centre.",
    ]
    if pred.P4 < 0:
        sentences.append(f"P4 = {pred.P4:.4g}: stripes bifurcate subcritically and ring-type patterns are predicted.")
    else:
        sentences.append(f"P4 = {pred.P4:.4g}: stripes bifurcate supercritically; no ring-type patterns are predicted.")
    sentences.append(f"Expect {phase} spot A-type localised {polarity}.")
    return sentences


def perturbed_eigenvalues(model: ModelSpec, tp: TuringPoint, eps: float) -> np.ndarray:
    """Roots of σ(λ; μ* + ε), ordered by imaginary part"""
    state = continue_branch(model, tp.state, tp.mu + eps)
    M = np.asarray(model.jet.jacobian(state.u_star, state.v_star, state.mu), dtype=float)
    half_trace = 0.5 * (M[0, 0] + M[1, 1])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    root = np.sqrt(complex(half_trace ** 2 - det))
    roots = np.array([half_trace - root, half_trace + root])
    return roots[np.argsort(roots.imag)]


def analyze_point(model: ModelSpec, tp: TuringPoint) -> Tuple[LocalForm, Predictors]:
    lf = build_local_form(model, tp)
    return lf, predictors(lf)


@dataclass
class SignMap:
    """Three-way P4 classification over a two-parameter grid; axis 0 runs over ``xs``"""
    x_name: str
    xs: np.ndarray
    y_name: str
    ys: np.ndarray
    classes: np.ndarray
    p4: np.ndarray
    reasons: Dict[Tuple[int, int], str] = field(default_factory=dict)

    def rows(self):
        for i, x in enumerate(self.xs):
            for j, y in enumerate(self.ys):
                yield float(x), float(y), int(self.classes[i, j])


GuessFunction = Callable[[ModelSpec], Optional[Tuple[float, float, float]]]


def _classify_cell(model: ModelSpec, mu_range: Tuple[float, float],
                   guess: Optional[GuessFunction]) -> Tuple[int, float, str]:
    try:
        tp = None
        start = guess(model) if guess else None
        if start is not None:
            try:
                tp = find_turing_point(model, start[0], start[1:])
            except NumericalError as exc:
                logger.debug(f"{model.params}: guessed search failed ({exc}); scanning")
        if tp is None:
            points = scan_turing_points(model, mu_range)
            if not points:
                return NO_TURING, math.nan, 'no Turing point in mu range'
            tp = points[0]
        _, pred = analyze_point(model, tp)
    except (NumericalError, UsageError) as exc:
        return NO_TURING, math.nan, str(exc)
    return (P4_NEGATIVE if pred.P4 < 0 else P4_POSITIVE), pred.P4, ''


def p4_sign_map(template: ModelSpec, x_name: str, xs: Sequence[float], y_name: str, ys: Sequence[float],
                mu_range: Tuple[float, float], guess: Optional[GuessFunction] = None,
                workers: int = 1) -> SignMap:
    """Classify every (x, y) cell as no-turing, P4 < 0 or P4 > 0

    ``guess`` may supply a (μ, u, v) start per cell; otherwise the first Turing
    point found by scanning ``mu_range`` is used.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise UsageError("sign map grid must be finite")

    cells = [(i, j) for i in range(xs.size) for j in range(ys.size)]

    def work(cell):
        i, j = cell
        model = template.with_overrides({x_name: xs[i], y_name: ys[j]})
        return cell, _classify_cell(model, mu_range, guess)

    classes = np.zeros((xs.size, ys.size), dtype=int)
    p4 = np.full((xs.size, ys.size), np.nan)
    reasons: Dict[Tuple[int, int], str] = {}
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for (i, j), (label, value, reason) in pool.map(work, cells):
            classes[i, j] = label
            p4[i, j] = value
            if reason:
                reasons[(i, j)] = reason

    counts = {label: int(np.count_nonzero(classes == label)) for label in (NO_TURING, P4_NEGATIVE, P4_POSITIVE)}
    logger.info(f"{template.name}: P4 sign map {xs.size}x{ys.size}: "
                f"{counts[NO_TURING]} no-turing, {counts[P4_NEGATIVE]} P4<0, {counts[P4_POSITIVE]} P4>0")
    return SignMap(x_name=x_name, xs=xs, y_name=y_name, ys=ys, classes=classes, p4=p4, reasons=reasons)
