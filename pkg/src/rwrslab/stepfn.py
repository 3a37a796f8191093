"""Piecewise-constant functions on the real line with exact integration."""

from __future__ import annotations

import math

import numpy as np


class StepFunction:
    """Right-open step function: ``values[i]`` on ``[breaks[i], breaks[i+1])``, zero elsewhere.

    ``values`` may be an object array of ``fractions.Fraction`` for exact
    rational arithmetic; only construction and :meth:`integral` are meant
    to be used in that mode.
    """

    __slots__ = ("breaks", "values")

    def __init__(self, breaks, values):
        breaks = np.asarray(breaks)
        values = np.asarray(values)
        if breaks.ndim != 1 or values.ndim != 1:
            raise ValueError("breaks and values must be one-dimensional")
        if len(values) == 0:
            breaks = np.zeros(0)
        elif len(breaks) != len(values) + 1:
            raise ValueError("need exactly one more breakpoint than values")
        if len(breaks) > 1 and not np.all(breaks[1:] > breaks[:-1]):
            raise ValueError("breakpoints must be strictly increasing")
        self.breaks = breaks
        self.values = values

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls(np.zeros(0), np.zeros(0))

    @classmethod
    def indicator(cls, lo: float, hi: float, value: float = 1.0) -> "StepFunction":
        if hi <= lo:
            return cls.zero()
        return cls([lo, hi], [value])

    @classmethod
    def from_cells(cls, first_cell: int, width: float, values) -> "StepFunction":
        """Lattice function with cells ``[k*width, (k+1)*width)`` from ``k = first_cell``."""
        values = np.asarray(values)
        k = np.arange(first_cell, first_cell + len(values) + 1)
        return cls(k * width, values)

    def __len__(self):
        return len(self.values)

    @property
    def support(self) -> tuple[float, float]:
        if len(self.values) == 0:
            return (0.0, 0.0)
        return (float(self.breaks[0]), float(self.breaks[-1]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if len(self.values) == 0:
            return np.zeros(x.shape)
        idx = np.searchsorted(self.breaks, x, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.values))
        out = np.zeros(x.shape)
        out[inside] = self.values[idx[inside]]
        return out

    def _merged(self, other: "StepFunction"):
        pts = np.union1d(self.breaks, other.breaks).astype(float)
        if len(pts) < 2:
            return pts, np.zeros(0), np.zeros(0)
        left = pts[:-1]
        return pts, self(left), other(left)

    def __add__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        pts, a, b = self._merged(other)
        return StepFunction(pts, a + b) if len(a) else StepFunction.zero()

    def __sub__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        pts, a, b = self._merged(other)
        return StepFunction(pts, a - b) if len(a) else StepFunction.zero()

    def __mul__(self, scalar):
        if isinstance(scalar, StepFunction):
            pts, a, b = self._merged(scalar)
            return StepFunction(pts, a * b) if len(a) else StepFunction.zero()
        return StepFunction(self.breaks, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return StepFunction(self.breaks, -self.values)

    def integral(self):
        """Exact sum of ``value * width`` (rational if the arrays hold Fractions)."""
        if len(self.values) == 0:
            return 0
        return (np.diff(self.breaks) * self.values).sum()

    def power_integral(self, p: float, window: tuple[float, float] | None = None) -> float:
        """``int_window |f|^p dx`` summed cell by cell."""
        if len(self.values) == 0:
            return 0.0
        lo = self.breaks[:-1].astype(float)
        hi = self.breaks[1:].astype(float)
        if window is not None:
            lo = np.clip(lo, window[0], window[1])
            hi = np.clip(hi, window[0], window[1])
        return float(np.sum((hi - lo) * np.abs(self.values.astype(float)) ** p))

    def antiderivative(self, x):
        """``F(x) = int_{-inf}^x f``, exact piecewise-linear interpolation."""
        x = np.asarray(x, dtype=float)
        if len(self.values) == 0:
            return np.zeros(x.shape)
        vals = self.values.astype(float)
        cum = np.concatenate([[0.0], np.cumsum(np.diff(self.breaks) * vals)])
        xc = np.clip(x, self.breaks[0], self.breaks[-1])
        idx = np.clip(np.searchsorted(self.breaks, xc, side="right") - 1, 0, len(vals) - 1)
        return cum[idx] + vals[idx] * (xc - self.breaks[idx])

    def dilate(self, c: float) -> "StepFunction":
        """The function ``x -> f(c*x)`` for ``c > 0``."""
        if c <= 0:
            raise ValueError("dilation factor must be positive")
        return StepFunction(self.breaks / c, self.values)

    def coarsen(self, delta: float) -> "StepFunction":
        """The function ``x -> f(delta * floor(x / delta))``."""
        if not delta > 0:
            raise ValueError("delta must be positive")
        if len(self.values) == 0:
            return StepFunction.zero()
        j0 = math.floor(self.breaks[0] / delta)
        j1 = math.floor(self.breaks[-1] / delta)
        j = np.arange(j0, j1 + 1)
        return StepFunction.from_cells(j0, delta, self(j * delta))

    def cell_average(self, delta: float) -> "StepFunction":
        """Average of ``f`` over each cell ``[j delta, (j+1) delta)``."""
        if not delta > 0:
            raise ValueError("delta must be positive")
        if len(self.values) == 0:
            return StepFunction.zero()
        j0 = math.floor(self.breaks[0] / delta)
        j1 = math.ceil(self.breaks[-1] / delta)
        edges = np.arange(j0, j1 + 1) * delta
        return StepFunction(edges, np.diff(self.antiderivative(edges)) / delta)


def _check_p(p: float):
    if not p >= 1:
        raise ValueError(f"L^p index must be >= 1, got {p}")


def lp_norm(f: StepFunction, p: float, window: tuple[float, float] | None = None) -> float:
    """``(int_window |f|^p)^(1/p)``; ``window=None`` integrates over the whole line."""
    _check_p(p)
    return f.power_integral(p, window) ** (1.0 / p)


def lp_distance(f: StepFunction, g: StepFunction, p: float, window=None) -> float:
    _check_p(p)
    return lp_norm(f - g, p, window)


def symmetric_window(M: float) -> tuple[float, float]:
    return (-float(M), float(M))
