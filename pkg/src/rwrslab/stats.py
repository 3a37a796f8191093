"""Small statistical helpers: two-sample KS, power-law fits, empirical characteristic functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical_value: float
    level: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_value


def ks_statistic(x, y) -> float:
    """``sup_z |F_x(z) - F_y(z)|`` over the pooled sample."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    z = np.concatenate([x, y])
    fx = np.searchsorted(x, z, side="right") / len(x)
    fy = np.searchsorted(y, z, side="right") / len(y)
    return float(np.max(np.abs(fx - fy)))


def ks_critical_value(n1: int, n2: int, level: float = 0.01) -> float:
    """Asymptotic two-sample critical value ``c(level) sqrt((n1 + n2) / (n1 n2))``."""
    c = math.sqrt(-0.5 * math.log(level / 2.0))
    return c * math.sqrt((n1 + n2) / (n1 * n2))


def ks_two_sample(x, y, level: float = 0.01) -> KsResult:
    return KsResult(ks_statistic(x, y), ks_critical_value(len(x), len(y), level), level)


def iqr(samples) -> float:
    q1, q3 = np.quantile(np.asarray(samples, dtype=float), [0.25, 0.75])
    return float(q3 - q1)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    stderr: float
    intercept: float


def fit_power_law(x, y) -> PowerLawFit:
    """Least-squares slope of ``log y`` on ``log x`` with its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two points to fit a slope")
    if not (np.all(x > 0) and np.all(y > 0)):
        raise ValueError("power-law fit needs strictly positive values")
    lx, ly = np.log(x), np.log(y)
    xc = lx - lx.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("abscissae must not all coincide")
    slope = float(xc @ (ly - ly.mean())) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    if len(lx) > 2:
        resid = ly - intercept - slope * lx
        stderr = math.sqrt(float(resid @ resid) / (len(lx) - 2) / sxx)
    else:
        stderr = float("nan")
    return PowerLawFit(slope, stderr, intercept)


def empirical_cf(samples, u) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.array([np.mean(np.cos(v * x)) + 1j * np.mean(np.sin(v * x)) for v in u])
