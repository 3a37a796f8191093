"""Lattice sceneries, their cumulative processes and the associated random measures.

Scenery values are materialized lazily in fixed blocks of sites. Each block is
drawn from its own counter range of the scenery's key, so any window can be
requested in any order and always yields the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.signal import fftconvolve

from .sampling import LANE_SCENERY, SeedSpec, StableParams, derive_stream, sample_stable
from .stepfn import StepFunction

BLOCK = 4096
# power-decay normalization is calibrated at most here
MAX_CALIBRATION_LENGTH = 2**18
_DIRECT_CONV_MAX = 256


@dataclass(frozen=True)
class IidStable:
    params: StableParams


@dataclass(frozen=True)
class Summable:
    """Finite kernel ``c_k = coefficients[k - first_lag]``."""

    coefficients: tuple
    first_lag: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.coefficients:
            raise ValueError("a summable kernel needs at least one coefficient")


@dataclass(frozen=True)
class PowerDecay:
    """``c_k = p1 k^-gamma`` (k >= 1), ``p2 |k|^-gamma`` (k <= -1), ``c_0 = p1``, cut at ``|k| <= radius``."""

    gamma: float
    p1: float = 1.0
    p2: float = 1.0
    radius: int = 100_000

    def __post_init__(self):
        if not (0.5 < self.gamma < 1.0):
            raise ValueError(f"power-decay exponent gamma must lie in (1/2, 1), got {self.gamma}")
        if self.p1 * self.p2 == 0:
            raise ValueError("power-decay kernel needs p1 * p2 != 0")
        if self.radius < 2:
            raise ValueError("truncation radius must be at least 2")

    @property
    def hurst(self) -> float:
        return 1.5 - self.gamma


@dataclass(frozen=True)
class MovingAverage:
    kernel: Union[Summable, PowerDecay]
    innovation_std: float = 1.0

    def __post_init__(self):
        if not self.innovation_std > 0:
            raise ValueError("innovation_std must be positive")


ScenerySpec = Union[IidStable, MovingAverage]


@dataclass(frozen=True)
class BrownianNoise:
    pass


@dataclass(frozen=True)
class FbmNoise:
    hurst: float

    def __post_init__(self):
        if not (0.5 < self.hurst < 1.0):
            raise ValueError(f"fractional noise inner product needs H in (1/2, 1), got {self.hurst}")


@lru_cache(maxsize=32)
def kernel_coefficients(kernel) -> tuple[int, np.ndarray]:
    """``(first_lag, c)`` with ``c[j]`` the coefficient at lag ``first_lag + j``."""
    if isinstance(kernel, Summable):
        return kernel.first_lag, np.array(kernel.coefficients)
    R = kernel.radius
    k = np.abs(np.arange(-R, R + 1, dtype=float))
    k[R] = 1.0
    c = k**-kernel.gamma
    c[:R] *= kernel.p2
    c[R:] *= kernel.p1
    return -R, c


def cumulative_variance(spec: MovingAverage, n: int) -> float:
    """Exact ``Var(w_n) = std^2 sum_i (sum_{0<=x<n} c_{x-i})^2``."""
    _, c = kernel_coefficients(spec.kernel)
    prefix = np.concatenate([[0.0], np.cumsum(c)])
    # b[j] = sum of c over the n-long window ending at j
    j = np.arange(len(c) + n - 1)
    b = prefix[np.minimum(j + 1, len(c))] - prefix[np.maximum(j + 1 - n, 0)]
    return spec.innovation_std**2 * float(np.dot(b, b))


def calibration_length(kernel: PowerDecay) -> int:
    """Largest power of two not above ``radius / 2``, capped at ``MAX_CALIBRATION_LENGTH``."""
    return min(MAX_CALIBRATION_LENGTH, 2 ** int(math.floor(math.log2(kernel.radius / 2))))


@lru_cache(maxsize=32)
def power_decay_constant(spec: MovingAverage) -> float:
    """``sqrt(Var(w_N)) / N^H`` at the calibration length ``N``."""
    n = calibration_length(spec.kernel)
    return math.sqrt(cumulative_variance(spec, n)) / n**spec.kernel.hurst


def normalization(spec: ScenerySpec, h: float) -> float:
    """``gamma_h`` making ``W_h`` converge to the limiting noise."""
    if not h > 0:
        raise ValueError("mesh h must be positive")
    if isinstance(spec, IidStable):
        return h ** (1.0 / spec.params.index) / spec.params.scale
    kernel = spec.kernel
    if isinstance(kernel, Summable):
        total = abs(sum(kernel.coefficients))
        if total == 0:
            raise ValueError("summable kernel with zero sum has no Brownian normalization")
        return math.sqrt(h) / (total * spec.innovation_std)
    return h**kernel.hurst / power_decay_constant(spec)


def limit_model(spec: ScenerySpec):
    """Limiting Gaussian noise of a square-integrable scenery."""
    if isinstance(spec, MovingAverage):
        if isinstance(spec.kernel, Summable):
            return BrownianNoise()
        return FbmNoise(spec.kernel.hurst)
    raise ValueError("i.i.d. stable sceneries have no L^2 limit inner product")


def _zigzag(b: int) -> int:
    return 2 * b if b >= 0 else -2 * b - 1


class Scenery:
    """Site-addressable scenery ``xi_x`` materialized block by block on demand."""

    def __init__(self, spec: ScenerySpec, seed: SeedSpec, tag: int = 0):
        self.spec = spec
        self.seed = seed
        self.tag = tag
        self._blocks: dict[int, np.ndarray] = {}
        self._innov: dict[int, np.ndarray] = {}
        self.x_min = 0
        self.x_max = -1

    def _stream(self, kind: int, block: int):
        return derive_stream(self.seed, lane=LANE_SCENERY + 2 * self.tag + kind, block=_zigzag(block))

    def _innovation_block(self, b: int) -> np.ndarray:
        blk = self._innov.get(b)
        if blk is None:
            blk = self._stream(1, b).normal(0.0, self.spec.innovation_std, BLOCK)
            self._innov[b] = blk
        return blk

    def innovations(self, lo: int, hi: int) -> np.ndarray:
        """Moving-average innovations ``eta_i`` for ``lo <= i <= hi``."""
        if not isinstance(self.spec, MovingAverage):
            raise TypeError("only moving-average sceneries have innovations")
        return self._gather(self._innovation_block, lo, hi)

    def _value_block(self, b: int) -> np.ndarray:
        blk = self._blocks.get(b)
        if blk is not None:
            return blk
        if isinstance(self.spec, IidStable):
            blk = sample_stable(self.spec.params, self._stream(0, b), BLOCK)
        else:
            first, c = kernel_coefficients(self.spec.kernel)
            last = first + len(c) - 1
            lo = b * BLOCK
            eta = self.innovations(lo - last, lo + BLOCK - 1 - first)
            if len(c) <= _DIRECT_CONV_MAX:
                blk = np.convolve(eta, c, mode="valid")
            else:
                blk = fftconvolve(eta, c, mode="valid")
        self._blocks[b] = blk
        return blk

    @staticmethod
    def _gather(get_block, lo: int, hi: int) -> np.ndarray:
        if hi < lo:
            return np.zeros(0)
        b0, b1 = lo // BLOCK, hi // BLOCK
        parts = [get_block(b) for b in range(b0, b1 + 1)]
        flat = parts[0] if len(parts) == 1 else np.concatenate(parts)
        return flat[lo - b0 * BLOCK : hi - b0 * BLOCK + 1]

    def values(self, lo: int, hi: int) -> np.ndarray:
        """``xi_x`` for ``lo <= x <= hi``."""
        return self._gather(self._value_block, int(lo), int(hi))

    def take(self, sites) -> np.ndarray:
        sites = np.asarray(sites, dtype=np.int64)
        if sites.size == 0:
            return np.zeros(sites.shape)
        lo, hi = int(sites.min()), int(sites.max())
        return self.values(lo, hi)[sites - lo]

    @property
    def window(self) -> np.ndarray:
        return self.values(self.x_min, self.x_max)


def generate_scenery(spec: ScenerySpec, window: tuple[int, int], seed: SeedSpec, tag: int = 0) -> Scenery:
    x_min, x_max = int(window[0]), int(window[1])
    if x_max < x_min:
        raise ValueError("empty scenery window")
    sc = Scenery(spec, seed, tag)
    sc.x_min, sc.x_max = x_min, x_max
    sc.values(x_min, x_max)
    return sc


class CumulativeScenery:
    """``w_x``: signed partial sums of the scenery, linearly interpolated.

    ``w_0 = 0``, ``w_x = xi_0 + ... + xi_{x-1}`` for ``x > 0`` and
    ``w_x = -(xi_x + ... + xi_{-1})`` for ``x < 0``, so that ``w_{x+1} - w_x = xi_x``.
    """

    def __init__(self, scenery: Scenery):
        self.scenery = scenery

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        j = np.floor(x).astype(np.int64)
        lo = min(int(j.min()), 0) if j.size else 0
        hi = max(int(j.max()) + 1, 0) if j.size else 0
        vals = self.scenery.values(lo, hi)
        prefix = np.concatenate([[0.0], np.cumsum(vals)])
        w_int = prefix[j - lo] - prefix[-lo]
        return w_int + (x - j) * vals[j - lo]


class RescaledCumulative:
    """``W_h(x) = gamma_h w_{x/h}``."""

    def __init__(self, scenery: Scenery, h: float, gamma: float | None = None):
        self.h = h
        self.gamma = normalization(scenery.spec, h) if gamma is None else gamma
        self._w = CumulativeScenery(scenery)

    def __call__(self, x):
        return self.gamma * self._w(np.asarray(x, dtype=float) / self.h)


def rescaled_cumulative(scenery: Scenery, h: float) -> RescaledCumulative:
    return RescaledCumulative(scenery, h)


class RandomMeasure:
    """Signed measure with density ``gamma_h h^-1 sum_k xi_k 1[hk, h(k+1))``."""

    def __init__(self, scenery: Scenery, h: float, gamma: float | None = None):
        if not h > 0:
            raise ValueError("mesh h must be positive")
        self.scenery = scenery
        self.h = h
        self.gamma = normalization(scenery.spec, h) if gamma is None else gamma

    def cell_weights(self, f: StepFunction) -> tuple[int, np.ndarray]:
        """``(k0, v)`` with ``mu_h[f] = sum_j v[j] xi_{k0 + j}``."""
        if len(f) == 0:
            return 0, np.zeros(0)
        b0, b1 = f.support
        k0 = math.floor(b0 / self.h)
        k1 = math.ceil(b1 / self.h)
        edges = np.arange(k0, k1 + 1) * self.h
        cell = np.diff(f.antiderivative(edges))
        return k0, self.gamma * cell / self.h

    def integrate(self, f: StepFunction) -> float:
        k0, v = self.cell_weights(f)
        if len(v) == 0:
            return 0.0
        return float(np.dot(v, self.scenery.values(k0, k0 + len(v) - 1)))


def integrate(mu: RandomMeasure, f: StepFunction) -> float:
    return mu.integrate(f)


def innovation_weights(spec: MovingAverage, k0: int, coeffs: np.ndarray) -> tuple[int, np.ndarray]:
    """Rewrite ``sum_j coeffs[j] xi_{k0+j}`` as ``sum_i v[i - i0] eta_i``; returns ``(i0, v)``."""
    first, c = kernel_coefficients(spec.kernel)
    last = first + len(c) - 1
    if len(c) <= _DIRECT_CONV_MAX or len(coeffs) <= _DIRECT_CONV_MAX:
        v = np.convolve(coeffs, c[::-1])
    else:
        v = fftconvolve(coeffs, c[::-1])
    return k0 - last, v


def scaling_check(scenery: Scenery, h: float, f: StepFunction, c: float) -> tuple[float, float]:
    """Both sides of ``mu_h[f(c .)] = (gamma_h / gamma_{ch}) mu_{ch}[f]``."""
    lhs = RandomMeasure(scenery, h).integrate(f.dilate(c))
    g_h = normalization(scenery.spec, h)
    g_ch = normalization(scenery.spec, c * h)
    rhs = g_h / g_ch * RandomMeasure(scenery, c * h).integrate(f)
    return lhs, rhs


def _fbm_rect(hurst: float, a, b, c, d):
    """``Cov(B(b) - B(a), B(d) - B(c))`` for unit fractional Brownian motion."""
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(b - c) ** h2 + np.abs(a - d) ** h2 - np.abs(a - c) ** h2 - np.abs(b - d) ** h2)


def limit_inner_product(model, f1: StepFunction, f2: StepFunction) -> float:
    """``<f1, f2>_W`` for Brownian or fractional Brownian noise, in closed form."""
    if len(f1) == 0 or len(f2) == 0:
        return 0.0
    if isinstance(model, BrownianNoise):
        return float((f1 * f2).integral())
    if isinstance(model, FbmNoise):
        a, b = f1.breaks[:-1, None], f1.breaks[1:, None]
        c, d = f2.breaks[None, :-1], f2.breaks[None, 1:]
        k = _fbm_rect(model.hurst, a, b, c, d)
        return float(f1.values @ k @ f2.values)
    raise TypeError(f"unsupported noise model {model!r}")
