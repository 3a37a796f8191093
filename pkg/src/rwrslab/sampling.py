"""Seedable random streams, strictly stable variables and fractional Gaussian noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1

# Counter word 3 carries the lane, word 2 the block; words 0-1 are consumed by draws.
# Walkers use small lanes, sceneries lanes from LANE_SCENERY upward.
LANE_SCENERY = 1 << 62


class EmbeddingError(RuntimeError):
    """Circulant embedding produced eigenvalues that are too negative to clip."""


@dataclass(frozen=True)
class StableParams:
    """Strictly stable law with characteristic function
    ``exp(-scale**index * |u|**index * (1 - i*skewness*tan(pi*index/2)*sgn(u)))``.
    """

    index: float
    scale: float = 1.0
    skewness: float = 0.0

    def __post_init__(self):
        if not (1.0 < self.index <= 2.0):
            raise ValueError(f"stable index must lie in (1, 2], got {self.index}")
        if not self.scale > 0:
            raise ValueError(f"stable scale must be positive, got {self.scale}")
        if not (-1.0 <= self.skewness <= 1.0):
            raise ValueError(f"skewness must lie in [-1, 1], got {self.skewness}")

    @property
    def tan_term(self) -> float:
        # tan(pi) is not exactly zero in floating point
        if self.index == 2.0:
            return 0.0
        return math.tan(math.pi * self.index / 2.0)

    def cf(self, u):
        """Characteristic function evaluated at ``u`` (array-like)."""
        u = np.asarray(u, dtype=float)
        a = self.index
        return np.exp(
            -(self.scale**a)
            * np.abs(u) ** a
            * (1.0 - 1j * self.skewness * self.tan_term * np.sign(u))
        )


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) <= _U64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")


@dataclass(frozen=True)
class FgnParams:
    hurst: float
    length: int

    def __post_init__(self):
        if not (0.0 < self.hurst < 1.0):
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        if self.length < 1:
            raise ValueError(f"length must be positive, got {self.length}")


def derive_stream(seed: SeedSpec, lane: int = 0, block: int = 0) -> np.random.Generator:
    """Return a Philox generator keyed by ``(master_seed, stream_id)``.

    ``lane`` and ``block`` select disjoint regions of the counter space, so one
    key can feed several independent consumers (walkers, scenery blocks)
    without coordination. The result depends only on the arguments.
    """
    if not (0 <= lane <= _U64 and 0 <= block <= _U64):
        raise ValueError("lane and block must be unsigned 64-bit integers")
    key = np.array([seed.master_seed, seed.stream_id], dtype=np.uint64)
    counter = np.array([0, 0, block, lane], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def sample_stable(params: StableParams, stream: np.random.Generator, count: int) -> np.ndarray:
    """Chambers-Mallows-Stuck draws from the strictly stable law ``params``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    a = params.index
    zeta = params.skewness * params.tan_term
    b = math.atan(zeta) / a
    s = (1.0 + zeta * zeta) ** (1.0 / (2.0 * a))
    v = stream.uniform(-math.pi / 2, math.pi / 2, size=count)
    w = stream.standard_exponential(size=count)
    cos_v = np.cos(v)
    x = (
        s
        * np.sin(a * (v + b))
        / cos_v ** (1.0 / a)
        * (np.cos(v - a * (v + b)) / w) ** ((1.0 - a) / a)
    )
    return params.scale * x


def fgn_autocovariance(hurst: float, lags) -> np.ndarray:
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


def _circulant_eigenvalues(hurst: float, n: int) -> np.ndarray:
    r = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.fft(row).real
    floor = -1e-8 * lam.max()
    if lam.min() < floor:
        raise EmbeddingError(
            f"circulant embedding for H={hurst}, n={n} has eigenvalue {lam.min():.3e}"
        )
    return np.clip(lam, 0.0, None)


def sample_fgn(params: FgnParams, stream: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Exact fractional Gaussian noise by circulant embedding.

    Returns shape ``(length,)``, or ``(count, length)`` when ``count`` is given.
    Falls back to a Cholesky factor for lengths up to 2048 when the embedding
    is not positive semidefinite.
    """
    n = params.length
    shape = (n,) if count is None else (count, n)
    reps = 1 if count is None else count
    try:
        lam = _circulant_eigenvalues(params.hurst, n)
    except EmbeddingError:
        if n > 2048:
            raise
        cov = fgn_autocovariance(params.hurst, np.subtract.outer(np.arange(n), np.arange(n)))
        chol = np.linalg.cholesky(cov)
        z = stream.standard_normal((reps, n))
        return (z @ chol.T).reshape(shape)
    m = 2 * n
    z = stream.standard_normal((reps, m)) + 1j * stream.standard_normal((reps, m))
    y = np.fft.fft(np.sqrt(lam / m) * z, axis=-1)
    return y.real[:, :n].reshape(shape)
