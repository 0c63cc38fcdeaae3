"""
Bessel functions of the first kind for the integer orders used by the profile sums
"""

from typing import Union

import numpy as np
import numpy.typing as npt
from scipy.special import jv as scipy_jv

from utils import UsageError

MAX_ORDER = 64

ArrayLike = Union[float, npt.NDArray]


class BesselOrderError(UsageError):
    pass


def _check_order(n: int) -> int:
    if int(n) != n or n < 0:
        raise BesselOrderError(f"Bessel order must be a non-negative integer (got {n})")
    if n > MAX_ORDER:
        raise BesselOrderError(f"Bessel order {n} exceeds the supported maximum {MAX_ORDER}")
    return int(n)


def bessel_j(n: int, x: ArrayLike) -> ArrayLike:
    """J_n(x) for integer 0 <= n <= 64 and x >= 0

    Args:
        n - Bessel fn order.
        x - Non-negative arguments, scalar or array.
    """
    n = _check_order(n)
    values = np.asarray(x, dtype=float)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise UsageError("Bessel arguments must be finite and non-negative")
    result = scipy_jv(n, values)
    return float(result) if result.ndim == 0 else result


def bessel_j_table(n_max: int, x: ArrayLike) -> npt.NDArray:
    """Stack of J_0(x) .. J_{n_max}(x); the order axis comes first"""
    n_max = _check_order(n_max)
    values = np.asarray(x, dtype=float)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise UsageError("Bessel arguments must be finite and non-negative")
    orders = np.arange(n_max + 1).reshape((-1,) + (1,) * values.ndim)
    return scipy_jv(orders, values[np.newaxis, ...])
