"""Log-log rate fitting on geometric step-size grids."""
from dataclasses import dataclass

import numpy as np

ZERO_FLOOR = 1e-13


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points_used: int


def geometric_grid(start=2.0**-3, ratio=0.5, count=8):
    """``start * ratio**k`` for ``k = 0..count-1`` (decreasing when ratio < 1)."""
    if count < 1:
        raise ValueError("grid count must be positive")
    if not 0.0 < ratio < 1.0:
        raise ValueError("grid ratio must lie in (0, 1)")
    if start <= 0.0:
        raise ValueError("grid start must be positive")
    return start * ratio ** np.arange(count)


def default_grid():
    return geometric_grid(2.0**-3, 0.5, 8)


def fit_rate(h, values, floor=ZERO_FLOOR, min_points=4):
    """Least-squares slope of ``log|values|`` against ``log h``.

    Points with ``|value| < floor`` are treated as exact zeros and dropped.
    Returns None when fewer than ``min_points`` points remain.
    """
    h = np.asarray(h, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    keep = v >= floor
    return fit_log_rate(np.log(h[keep]), np.log(v[keep]), min_points)


def fit_log_rate(log_h, log_v, min_points=4):
    """Same as :func:`fit_rate` but on values that are already logarithms."""
    x = np.asarray(log_h, dtype=float)
    y = np.asarray(log_v, dtype=float)
    if x.size < min_points:
        return None
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, int(x.size))


def tail_decreasing(values, tail=4):
    """True when the last ``tail`` entries are strictly decreasing."""
    v = np.asarray(values, dtype=float)[-tail:]
    return bool(np.all(np.diff(v) < 0))
