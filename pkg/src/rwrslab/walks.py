"""Integer random walks: stable-increment walks and floored correlated Gaussian walks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .sampling import FgnParams, SeedSpec, StableParams, derive_stream, sample_fgn, sample_stable


@dataclass(frozen=True)
class StableIncrements:
    """I.i.d. integer increments obtained by rounding strictly stable draws.

    ``simple=True`` selects the simple symmetric walk (steps +-1), which
    requires ``index == 2``. ``rounding="unbiased"`` rounds up with
    probability equal to the fractional part, which keeps the increment
    mean exactly zero for skewed laws.
    """

    params: StableParams
    simple: bool = False
    rounding: str = "nearest"

    def __post_init__(self):
        if self.simple and self.params.index != 2.0:
            raise ValueError("the simple symmetric walk requires index 2")
        if self.rounding not in ("nearest", "unbiased"):
            raise ValueError(f"unknown rounding {self.rounding!r}")


@dataclass(frozen=True)
class CorrelatedGaussian:
    hurst: float

    def __post_init__(self):
        if not (0.0 < self.hurst < 1.0):
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")


WalkSpec = Union[StableIncrements, CorrelatedGaussian]


def simple_walk() -> StableIncrements:
    """Simple symmetric walk; unit step variance matches scale ``1/sqrt(2)``."""
    return StableIncrements(StableParams(2.0, 2.0**-0.5, 0.0), simple=True)


@dataclass(frozen=True)
class WalkPath:
    positions: np.ndarray
    spec: WalkSpec

    @property
    def length(self) -> int:
        return len(self.positions) - 1


@dataclass(frozen=True)
class ScalingSequence:
    """``n -> n**exponent``."""

    exponent: float

    def __call__(self, n):
        return np.power(n, self.exponent, dtype=float)


def scaling_for(spec: WalkSpec) -> ScalingSequence:
    if isinstance(spec, StableIncrements):
        return ScalingSequence(1.0 / spec.params.index)
    if isinstance(spec, CorrelatedGaussian):
        return ScalingSequence(spec.hurst)
    raise TypeError(f"unsupported walk spec {spec!r}")


def floor_partial_sums(increments: np.ndarray) -> np.ndarray:
    """``(0, [X_1], [X_1 + X_2], ...)`` with floor toward minus infinity."""
    s = np.floor(np.cumsum(increments)).astype(np.int64)
    return np.concatenate([np.zeros(1, dtype=np.int64), s])


def _integer_increments(spec: StableIncrements, n: int, stream: np.random.Generator) -> np.ndarray:
    if spec.simple:
        return 2 * stream.integers(0, 2, size=n, dtype=np.int64) - 1
    x = sample_stable(spec.params, stream, n)
    if spec.rounding == "nearest":
        return np.floor(x + 0.5).astype(np.int64)
    lo = np.floor(x)
    return (lo + (stream.random(n) < x - lo)).astype(np.int64)


def generate_walk(spec: WalkSpec, length: int, stream: np.random.Generator) -> WalkPath:
    if length < 0:
        raise ValueError("walk length must be non-negative")
    if isinstance(spec, StableIncrements):
        steps = _integer_increments(spec, length, stream)
        pos = np.concatenate([np.zeros(1, dtype=np.int64), np.cumsum(steps)])
    elif isinstance(spec, CorrelatedGaussian):
        noise = sample_fgn(FgnParams(spec.hurst, length), stream) if length else np.zeros(0)
        pos = floor_partial_sums(noise)
    else:
        raise TypeError(f"unsupported walk spec {spec!r}")
    return WalkPath(pos, spec)


def generate_walk_family(spec: WalkSpec, length: int, count: int, seed: SeedSpec, lane_offset: int = 0):
    """``count`` independent walks; member ``i`` draws from lane ``lane_offset + i`` of ``seed``."""
    if count < 1:
        raise ValueError("walk family needs at least one member")
    return [generate_walk(spec, length, derive_stream(seed, lane=lane_offset + i)) for i in range(count)]
