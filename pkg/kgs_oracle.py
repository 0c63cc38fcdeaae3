"""
Closed forms for the Klausmeier-Gray-Scott model

    f̂ = -v u² + m u,   ĝ = -μ + v + v u²,   D_v = δv,  β = 0

Steady states satisfy v = m/u and μ = m(1 + u²)/u. With x = δv·m the repeated
roots of σ sit at u*^± = sqrt(3x - 1 ± sqrt(8x² - 8x)) with value
λ^± = ((1 + u²) - x)/(2δv). λ^+ is always positive (Belyakov-Devaney); λ^- is
negative, giving a Turing point with k² = -λ^-, exactly when x > 2.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from localform import NO_TURING, P4_NEGATIVE, P4_POSITIVE, analyze_point
from model import ModelSpec, builtin
from turing import find_turing_point
from utils import UsageError, get_logger

logger = get_logger('kgs_oracle')

ORACLE_MARGIN = 2.05
ORACLE_TOL = 1e-7
DEVIATION_FLOOR = 1e-4


class OraclePreconditionError(UsageError):
    pass


@dataclass(frozen=True)
class KgsClosedForm:
    m: float
    delta_v: float
    u_star_minus: Optional[float] = None
    u_star_plus: Optional[float] = None
    mu_star_minus: Optional[float] = None
    mu_star_plus: Optional[float] = None
    lambda_minus: Optional[float] = None
    lambda_plus: Optional[float] = None
    k: Optional[float] = None
    P1: Optional[float] = None
    P2: Optional[float] = None
    P3: Optional[float] = None
    P4: Optional[float] = None
    intermediates: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def x(self) -> float:
        return self.delta_v * self.m

    @property
    def has_turing_point(self) -> bool:
        return self.k is not None

    @property
    def v_star(self) -> Optional[float]:
        return None if self.u_star_minus is None else self.m / self.u_star_minus

    def predictors(self) -> Optional[Tuple[float, float, float, float]]:
        return None if self.P1 is None else (self.P1, self.P2, self.P3, self.P4)


def _repeated_root_u(x: float, sign: float) -> float:
    return math.sqrt(3.0 * x - 1.0 + sign * math.sqrt(8.0 * x * x - 8.0 * x))


def _intermediates(m: float, delta_v: float, u: float, k2: float) -> Dict[str, np.ndarray]:
    vec = np.array([-u ** 2, (m - k2) ** 2 / (2.0 * m)])
    return {
        'M1': np.array([[-m, -u ** 2], [2.0 * m / delta_v, (1.0 + u ** 2) / delta_v]]),
        'M2': np.array([[0.0, -2.0 * u ** 3 / (m * (u ** 2 - 1.0))],
                        [0.0, u * (m - k2) ** 2 / (m ** 2 * (u ** 2 - 1.0))]]),
        'U0': np.array([-u ** 2, m - k2]),
        'U1': np.array([0.0, k2]),
        'U0d': np.array([-1.0 / u ** 2, 0.0]),
        'U1d': np.array([(m - k2) / (k2 * u ** 2), 1.0 / k2]),
        'Q00': -u * (m - 2.0 * k2) * vec,
        'Q01': -k2 * u * vec,
        'C000': u ** 2 * (m - k2) * vec,
        'branch_slope': np.array(u ** 2 / (m * (u ** 2 - 1.0))),
    }


def closed_form(m: float, delta_v: float) -> KgsClosedForm:
    """All closed-form quantities available at (m, δv)"""
    if not (math.isfinite(m) and math.isfinite(delta_v) and m > 0 and delta_v > 0):
        raise OraclePreconditionError(f"KGS closed forms need m > 0 and δv > 0 (got m={m}, δv={delta_v})")
    x = delta_v * m
    if x < 1.0:
        return KgsClosedForm(m=m, delta_v=delta_v)

    u_minus = _repeated_root_u(x, -1.0)
    u_plus = _repeated_root_u(x, 1.0)
    lam_minus = ((1.0 + u_minus ** 2) - x) / (2.0 * delta_v)
    lam_plus = ((1.0 + u_plus ** 2) - x) / (2.0 * delta_v)
    bd = dict(
        m=m, delta_v=delta_v,
        u_star_minus=u_minus, u_star_plus=u_plus,
        mu_star_minus=m * (1.0 + u_minus ** 2) / u_minus,
        mu_star_plus=m * (1.0 + u_plus ** 2) / u_plus,
        lambda_minus=lam_minus, lambda_plus=lam_plus,
    )
    if x <= 2.0:
        return KgsClosedForm(**bd)

    u = u_minus
    k2 = -lam_minus
    P1 = u * (m - k2) ** 2 * (m + k2) / (4.0 * k2 * m ** 2 * (u ** 2 - 1.0))
    P2 = -(m - k2) / u ** 2
    P3 = -2.0 * u * m * k2 / ((m - 2.0 * k2) * (m - k2) * (m + k2))
    P4 = (5.0 / 6.0 * u ** 2 * (m - 2 * k2) ** 2 * (m - k2) * (m + k2) / (2.0 * m * k2)
          - 5.0 / 6.0 * u ** 2 * (m - 2 * k2) * (m - k2) ** 2 * (m + k2) ** 2 / (4.0 * m ** 2 * k2)
          - 19.0 / 18.0 * u ** 2 * (m - 2 * k2) ** 2 * (m - k2) ** 2 * (m + k2) ** 2 / (4.0 * m ** 2 * k2 ** 2)
          + 3.0 / 4.0 * u ** 2 * (m - k2) ** 2 * (m + k2) / (2.0 * m * k2))
    return KgsClosedForm(**bd, k=math.sqrt(k2), P1=P1, P2=P2, P3=P3, P4=P4,
                         intermediates=_intermediates(m, delta_v, u, k2))


def closed_form_guess(model: ModelSpec) -> Optional[Tuple[float, float, float]]:
    """(μ*, u*, v*) for a KGS model, or None when it has no Turing point"""
    cf = closed_form(model.params['m'], model.D_v)
    if not cf.has_turing_point:
        return None
    return cf.mu_star_minus, cf.u_star_minus, cf.v_star


@dataclass
class OracleReport:
    m: float
    delta_v: float
    closed: KgsClosedForm
    generic: Dict[str, float]
    deviations: Dict[str, float]

    @property
    def passed(self) -> bool:
        return all(value < ORACLE_TOL for value in self.deviations.values())

    @property
    def worst(self) -> Tuple[str, float]:
        return max(self.deviations.items(), key=lambda item: item[1])

    def lines(self) -> List[str]:
        lines = [f"KGS oracle at m={self.m:g}, delta_v={self.delta_v:g} (delta_v*m={self.m * self.delta_v:g})",
                 f"{'quantity':<10}{'closed form':>22}{'pipeline':>22}{'rel. dev.':>12}"]
        closed = self.closed_values()
        for name, deviation in self.deviations.items():
            lines.append(f"{name:<10}{closed[name]:>22.15g}{self.generic[name]:>22.15g}{deviation:>12.3g}")
        name, value = self.worst
        lines.append(f"{'PASS' if self.passed else 'FAIL'}: max deviation {value:.3g} ({name}), tolerance {ORACLE_TOL:g}")
        return lines

    def closed_values(self) -> Dict[str, float]:
        cf = self.closed
        return {'mu_star': cf.mu_star_minus, 'u_star': cf.u_star_minus, 'v_star': cf.v_star, 'k': cf.k,
                'P1': cf.P1, 'P2': cf.P2, 'P3': cf.P3, 'P4': cf.P4}


def oracle_compare(m: float, delta_v: float) -> OracleReport:
    """Run the generic pipeline on KGS(m, δv) and compare against the closed forms"""
    if not delta_v * m > ORACLE_MARGIN:
        raise OraclePreconditionError(
            f"oracle comparison needs delta_v*m > {ORACLE_MARGIN} (got {delta_v * m:g})")
    cf = closed_form(m, delta_v)
    model = builtin('kgs', {'m': m, 'D_v': delta_v})
    tp = find_turing_point(model, cf.mu_star_minus, (cf.u_star_minus, cf.v_star))
    _, pred = analyze_point(model, tp)

    generic = {'mu_star': tp.mu, 'u_star': tp.u_star, 'v_star': tp.v_star, 'k': tp.k,
               'P1': pred.P1, 'P2': pred.P2, 'P3': pred.P3, 'P4': pred.P4}
    report = OracleReport(m=m, delta_v=delta_v, closed=cf, generic=generic, deviations={})
    for name, expected in report.closed_values().items():
        report.deviations[name] = abs(generic[name] - expected) / max(abs(expected), DEVIATION_FLOOR)
    name, worst = report.worst
    logger.info(f"oracle m={m:g} delta_v={delta_v:g}: max deviation {worst:.3g} ({name})")
    return report


def closed_form_sign_map(delta_vs: Sequence[float], ms: Sequence[float]) -> np.ndarray:
    """Three-way class per (δv, m) cell; axis 0 runs over ``delta_vs``"""
    classes = np.zeros((len(delta_vs), len(ms)), dtype=int)
    for i, delta_v in enumerate(delta_vs):
        for j, m in enumerate(ms):
            cf = closed_form(float(m), float(delta_v))
            if cf.has_turing_point:
                classes[i, j] = P4_NEGATIVE if cf.P4 < 0 else P4_POSITIVE
            else:
                classes[i, j] = NO_TURING
    return classes
