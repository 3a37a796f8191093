"""Occupation counts of a walk and the rescaled local-time step function."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .stepfn import StepFunction
from .walks import WalkPath

DENSE_RANGE_LIMIT = 10**7


def discrete_time(n: int, t: float) -> int:
    """``[n t]``, tolerant to the rounding of grid points such as ``k/m``."""
    return math.floor(round(n * t, 9))


@dataclass(frozen=True)
class LocalTimeField:
    """``N(horizon, x)`` for the visited sites ``x`` (sorted); zero elsewhere."""

    sites: np.ndarray
    counts: np.ndarray
    horizon: int
    positions: np.ndarray

    def __getitem__(self, x: int) -> int:
        i = np.searchsorted(self.sites, x)
        if i < len(self.sites) and self.sites[i] == x:
            return int(self.counts[i])
        return 0

    def count_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        i = np.clip(np.searchsorted(self.sites, x), 0, len(self.sites) - 1)
        return np.where(self.sites[i] == x, self.counts[i], 0)

    def as_dict(self) -> dict[int, int]:
        return {int(s): int(c) for s, c in zip(self.sites, self.counts)}

    def total(self) -> int:
        return int(self.counts.sum())

    def at_horizon(self, m: int) -> "LocalTimeField":
        if m == self.horizon:
            return self
        return _count(self.positions, m)


def _count(positions: np.ndarray, m: int) -> LocalTimeField:
    pts = positions[: m + 1]
    lo, hi = int(pts.min()), int(pts.max())
    if hi - lo < DENSE_RANGE_LIMIT:
        dense = np.bincount(pts - lo, minlength=hi - lo + 1)
        nz = np.flatnonzero(dense)
        sites, counts = nz.astype(np.int64) + lo, dense[nz].astype(np.int64)
    else:
        sites, counts = np.unique(pts, return_counts=True)
        counts = counts.astype(np.int64)
    return LocalTimeField(sites, counts, m, positions)


def accumulate(path: WalkPath, horizon: int | None = None) -> LocalTimeField:
    """Exact occupation counts ``card{k <= horizon : S_k = x}``."""
    m = path.length if horizon is None else horizon
    if not (0 <= m <= path.length):
        raise ValueError(f"horizon {m} outside [0, {path.length}]")
    return _count(path.positions, m)


def lattice_step(sites: np.ndarray, values, width) -> StepFunction:
    """Step function equal to ``values[i]`` on ``[sites[i]*width, (sites[i]+1)*width)``."""
    if len(sites) == 0:
        return StepFunction.zero()
    values = np.asarray(values)
    edges = np.union1d(sites, sites + 1)
    left = edges[:-1]
    pos = np.clip(np.searchsorted(sites, left), 0, len(sites) - 1)
    hit = sites[pos] == left
    if values.dtype == object:
        vals = np.array([values[p] if h else Fraction(0) for p, h in zip(pos, hit)], dtype=object)
        brk = np.array([Fraction(int(e)) * width for e in edges], dtype=object)
    else:
        vals = np.where(hit, values[pos], 0.0)
        brk = edges * width
    return StepFunction(brk, vals)


@dataclass(frozen=True)
class RescaledLocalTime:
    """``x -> n^{-1} a_n N([n t], floor(a_n x))``."""

    field: LocalTimeField
    n: int
    a_n: float
    t: float

    @property
    def steps(self) -> int:
        return discrete_time(self.n, self.t)

    def __call__(self, x):
        cells = np.floor(self.a_n * np.asarray(x, dtype=float)).astype(np.int64)
        return self.a_n / self.n * self.field.count_at(cells)

    def to_step(self, exact: bool = False) -> StepFunction:
        f = self.field
        if exact:
            a = Fraction(self.a_n)
            vals = np.array([a * int(c) / self.n for c in f.counts], dtype=object)
            return lattice_step(f.sites, vals, 1 / a)
        return lattice_step(f.sites, self.a_n / self.n * f.counts, 1.0 / self.a_n)

    def mass(self) -> Fraction:
        """Exact integral over the line, computed from the rational step function."""
        return self.to_step(exact=True).integral()

    def coarsen(self, delta: float) -> StepFunction:
        """``x -> L(t, delta * floor(x / delta))``."""
        return self.to_step().coarsen(delta)


def rescale(field: LocalTimeField, n: int, a_n: float, t: float) -> RescaledLocalTime:
    if n < 1 or not a_n > 0:
        raise ValueError("need n >= 1 and a_n > 0")
    if t < 0:
        raise ValueError("t must be non-negative")
    k = discrete_time(n, t)
    if k > field.horizon:
        raise ValueError(f"[n t] = {k} exceeds the recorded horizon {field.horizon}")
    return RescaledLocalTime(field.at_horizon(k), n, float(a_n), t)


def combine(weights, fields) -> StepFunction:
    """``sum_i weights[i] * L_n(t_i, .)`` on the shared lattice."""
    weights = list(weights)
    fields = list(fields)
    if len(weights) != len(fields) or not fields:
        raise ValueError("need one weight per field and at least one field")
    n, a_n = fields[0].n, fields[0].a_n
    if any(f.n != n or f.a_n != a_n for f in fields):
        raise ValueError("all fields must share n and a_n")
    sites = np.unique(np.concatenate([f.field.sites for f in fields]))
    total = np.zeros(len(sites))
    for w, f in zip(weights, fields):
        total[np.searchsorted(sites, f.field.sites)] += w * f.field.counts
    return lattice_step(sites, a_n / n * total, 1.0 / a_n)


def average_local_time(fields) -> StepFunction:
    """Pointwise mean of rescaled local times sharing ``n`` and ``a_n``."""
    fields = list(fields)
    return combine([1.0 / len(fields)] * len(fields), fields)
