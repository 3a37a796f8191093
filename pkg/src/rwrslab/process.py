"""Random walk in random scenery: direct sums and the local-time representation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .local_time import accumulate, average_local_time, discrete_time, rescale
from .scenery import RandomMeasure, Scenery, ScenerySpec, normalization
from .walks import WalkPath, WalkSpec, scaling_for

DEFAULT_GRID_POINTS = 16


def default_t_grid(m: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.arange(1, m + 1) / m


@dataclass(frozen=True)
class RwrsPath:
    """``Z_k = sum_{j <= k} xi_{S_j}`` for ``k = 0..n``."""

    values: np.ndarray
    walk: WalkPath
    scenery: Scenery

    @property
    def length(self) -> int:
        return len(self.values) - 1


def compute_rwrs(path: WalkPath, scenery: Scenery) -> RwrsPath:
    return RwrsPath(np.cumsum(scenery.take(path.positions)), path, scenery)


def renormalizing_factor(walk_spec: WalkSpec, scenery_spec: ScenerySpec, n: int) -> tuple[float, float, float]:
    """``(a_n, gamma_{1/a_n}, a_n gamma_{1/a_n} / n)``; the last is ``n^-delta`` up to constants."""
    a_n = float(scaling_for(walk_spec)(n))
    gamma = normalization(scenery_spec, 1.0 / a_n)
    return a_n, gamma, a_n * gamma / n


@dataclass(frozen=True)
class RenormalizedRwrs:
    """``t -> a_n n^-1 gamma_{1/a_n} Z_[nt]``."""

    z: RwrsPath
    n: int
    a_n: float
    gamma: float
    metadata: dict = field(default_factory=dict)

    @property
    def prefactor(self) -> float:
        return self.a_n * self.gamma / self.n

    def __call__(self, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.array([discrete_time(self.n, s) for s in ts])
        if np.any(k > self.z.length):
            raise ValueError("t beyond the simulated horizon")
        out = self.prefactor * self.z.values[k]
        return out if np.ndim(t) else float(out[0])


def renormalize(z: RwrsPath, walk_spec: WalkSpec, scenery_spec: ScenerySpec, n: int | None = None) -> RenormalizedRwrs:
    n = z.length if n is None else n
    if n < 1:
        raise ValueError("renormalization needs n >= 1")
    a_n, gamma, pref = renormalizing_factor(walk_spec, scenery_spec, n)
    meta = {"a_n": a_n, "gamma": gamma, "prefactor": pref, "mesh": 1.0 / a_n}
    return RenormalizedRwrs(z, n, a_n, gamma, meta)


def _relative(lhs: float, rhs: float, scale: float) -> float:
    denom = max(abs(lhs), abs(rhs), scale)
    return 0.0 if denom == 0 else abs(lhs - rhs) / denom


def identity_sides(path: WalkPath, scenery: Scenery, t_grid=None, n: int | None = None):
    """Direct and measure-side values of the renormalized process on ``t_grid``.

    Returns ``(direct, measure, scale)`` arrays; ``scale`` is the renormalized
    sum of ``N |xi|`` used as the reference magnitude for relative errors.
    """
    n = path.length if n is None else n
    ts = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    a_n, gamma, pref = renormalizing_factor(path.spec, scenery.spec, n)
    # direct side: plain cumulative sum along the path
    z = np.cumsum(scenery.take(path.positions))
    direct = np.array([pref * z[discrete_time(n, t)] for t in ts])
    # measure side: occupation counts -> rescaled step function -> mu_{1/a_n}
    mu = RandomMeasure(scenery, 1.0 / a_n, gamma)
    field = accumulate(path)
    measure, scale = [], []
    for t in ts:
        lt = rescale(field, n, a_n, t)
        measure.append(mu.integrate(lt.to_step()))
        scale.append(pref * float(np.dot(lt.field.counts, np.abs(scenery.take(lt.field.sites)))))
    return direct, np.array(measure), np.array(scale)


def verify_identity(path: WalkPath, scenery: Scenery, t_grid=None, n: int | None = None) -> float:
    """Max relative gap between ``a_n n^-1 gamma Z_[nt]`` and ``mu_{1/a_n}[L_n(t, .)]``."""
    direct, measure, scale = identity_sides(path, scenery, t_grid, n)
    return max(_relative(d, m, s) for d, m, s in zip(direct, measure, scale))


@dataclass(frozen=True)
class MultiWalkerReward:
    paths: list
    totals: np.ndarray

    @property
    def count(self) -> int:
        return len(self.paths)


def multiwalker_reward(family, scenery: Scenery) -> MultiWalkerReward:
    family = list(family)
    if not family:
        raise ValueError("need at least one walker")
    lengths = {p.length for p in family}
    if len(lengths) != 1:
        raise ValueError("all walkers must share the same length")
    paths = [compute_rwrs(p, scenery) for p in family]
    totals = np.sum([p.values for p in paths], axis=0)
    return MultiWalkerReward(paths, totals)


def averaged_local_time(family, n: int, t: float):
    """``c^-1 sum_i L_n^(i)(t, .)`` as a step function."""
    family = list(family)
    a_n = float(scaling_for(family[0].spec)(n))
    return average_local_time(rescale(accumulate(p), n, a_n, t) for p in family)


def verify_multiwalker_identity(reward: MultiWalkerReward, t_grid=None, n: int | None = None) -> float:
    """Max relative gap in ``c^-1 a_n n^-1 gamma Z_[nt],c = mu[c^-1 sum_i L_n^(i)(t, .)]``."""
    walks = [p.walk for p in reward.paths]
    scenery = reward.paths[0].scenery
    n = walks[0].length if n is None else n
    ts = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    a_n, gamma, pref = renormalizing_factor(walks[0].spec, scenery.spec, n)
    mu = RandomMeasure(scenery, 1.0 / a_n, gamma)
    c = reward.count
    worst = 0.0
    for t in ts:
        k = discrete_time(n, t)
        direct = pref * reward.totals[k] / c
        avg = averaged_local_time(walks, n, t)
        measure = mu.integrate(avg)
        scale = pref / c * sum(
            float(np.abs(scenery.take(w.positions[: k + 1])).sum()) for w in walks
        )
        worst = max(worst, _relative(direct, measure, scale))
    return worst
