"""Monte Carlo engine and the statistical diagnostics built on it.

Every replicate draws from streams derived from ``(seed, replicate index)``,
and results are reduced in replicate order, so reports do not depend on the
number of worker threads.
"""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .local_time import accumulate, combine, discrete_time, rescale
from .process import renormalizing_factor
from .sampling import SeedSpec, derive_stream
from .scenery import (
    IidStable,
    MovingAverage,
    PowerDecay,
    RandomMeasure,
    Scenery,
    ScenerySpec,
    Summable,
    innovation_weights,
    limit_inner_product,
    limit_model,
)
from .stats import fit_power_law, iqr, ks_two_sample
from .stepfn import StepFunction
from .walks import CorrelatedGaussian, StableIncrements, WalkSpec, generate_walk, scaling_for

CF_GRID = (0.25, 0.5, 1.0, 2.0)
REFERENCE_STREAM = 1 << 63


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("RWRS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_ordered(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly on a thread pool; output order follows input order."""
    items = list(items)
    k = worker_count(workers)
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def describe(obj):
    """JSON-ready description of a (nested) spec dataclass, tagged with its type."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = describe(getattr(obj, f.name))
        return out
    if isinstance(obj, (tuple, list)):
        return [describe(x) for x in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def walk_exponent(spec: WalkSpec) -> float:
    return scaling_for(spec).exponent


def scenery_exponent(spec: ScenerySpec) -> float:
    if isinstance(spec, IidStable):
        return 1.0 / spec.params.index
    if isinstance(spec.kernel, Summable):
        return 0.5
    return spec.kernel.hurst


def target_exponent(walk: WalkSpec, scenery: ScenerySpec) -> float:
    """Growth exponent of ``Z_n``: ``1 - 1/alpha + 1/(alpha beta)`` for stable walk and scenery."""
    a = walk_exponent(walk)
    return 1.0 - a + a * scenery_exponent(scenery)


@dataclass(frozen=True)
class ExperimentConfig:
    walk: WalkSpec
    scenery: ScenerySpec
    n_grid: tuple = (2**10, 2**11, 2**12, 2**13)
    replicates: int = 200
    t_grid: tuple = (1.0,)
    weights: tuple = (1.0,)
    p: float = 2.0
    walkers: tuple = (4, 16, 64)
    delta_grid: tuple = (0.5, 0.25, 0.125, 0.0625)
    h_grid: tuple = (2.0**-10, 2.0**-12, 2.0**-14)
    seed: int = 0
    exponent_tolerance: float = 0.05
    ks_level: float = 0.01

    def __post_init__(self):
        for name in ("n_grid", "t_grid", "weights", "walkers", "delta_grid", "h_grid"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not (1.0 <= self.p <= 2.0):
            raise ValueError(f"p must lie in [1, 2], got {self.p}")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be non-empty and strictly increasing")
        if self.n_grid[0] < 1:
            raise ValueError("n_grid entries must be positive")
        if self.replicates < 2:
            raise ValueError(f"need at least 2 replicates, got {self.replicates}")
        if len(self.weights) != len(self.t_grid):
            raise ValueError("weights and t_grid must have equal length")
        if any(t <= 0 for t in self.t_grid) or list(self.t_grid) != sorted(self.t_grid):
            raise ValueError("t_grid must be positive and increasing")
        if any(c < 1 for c in self.walkers):
            raise ValueError("walker counts must be positive")
        if any(d <= 0 for d in self.delta_grid) or any(h <= 0 for h in self.h_grid):
            raise ValueError("delta_grid and h_grid must be positive")


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    statistics: dict
    verdicts: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.get("passed", True) for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "statistics": self.statistics,
            "verdicts": self.verdicts,
            "provenance": self.provenance,
        }


def _provenance(config: ExperimentConfig, **extra) -> dict:
    out = {"seed": config.seed, "code_version": __version__, "stream_rule": "replicate r -> stream_id r"}
    out.update(extra)
    return out


# -- replicate simulation ---------------------------------------------------


def simulate_replicate(config: ExperimentConfig, grid_index: int, replicate: int) -> tuple[float, np.ndarray]:
    """Raw ``Z_n`` and the renormalized process on ``t_grid`` for one replicate."""
    n = config.n_grid[grid_index]
    seed = SeedSpec(config.seed, replicate)
    walk = generate_walk(config.walk, n, derive_stream(seed, lane=grid_index << 32))
    scenery = Scenery(config.scenery, seed, tag=grid_index)
    z = np.cumsum(scenery.take(walk.positions))
    _, _, pref = renormalizing_factor(config.walk, config.scenery, n)
    ks = [discrete_time(n, t) for t in config.t_grid]
    return float(z[-1]), pref * z[ks]


def collect_marginals(config: ExperimentConfig, workers=None) -> dict:
    """``n -> (raw Z_n array, renormalized array of shape (replicates, len(t_grid)))``."""
    out = {}
    for g, n in enumerate(config.n_grid):
        rows = map_ordered(lambda r: simulate_replicate(config, g, r), range(config.replicates), workers)
        out[n] = (np.array([r[0] for r in rows]), np.array([r[1] for r in rows]))
    return out


def estimate_exponent(ns, samples) -> tuple[float, float]:
    """Slope of ``log IQR(Z_n)`` against ``log n`` and its standard error."""
    ns = list(ns)
    if len(ns) < 2:
        raise ValueError("exponent estimation needs at least two grid points")
    spreads = [iqr(s) for s in samples]
    if min(spreads) <= 0:
        raise ValueError("degenerate spread: all samples equal at some grid point")
    fit = fit_power_law(ns, spreads)
    return fit.exponent, fit.stderr


def self_consistency_ks(first, second, level: float = 0.01):
    return ks_two_sample(first, second, level)


def run_replicates(config: ExperimentConfig, workers=None) -> ExperimentReport:
    data = collect_marginals(config, workers)
    per_n = []
    for n in config.n_grid:
        raw, ren = data[n]
        last = ren[:, -1]
        per_n.append(
            {
                "n": n,
                "raw_iqr": iqr(raw),
                "raw_variance": float(np.var(raw, ddof=1)),
                "quantiles": dict(zip(("q05", "q25", "q50", "q75", "q95"), np.quantile(last, [0.05, 0.25, 0.5, 0.75, 0.95]).tolist())),
                "renormalized_mean": ren.mean(axis=0).tolist(),
                "cf_real": [float(np.mean(np.cos(u * last))) for u in CF_GRID],
                "cf_imag": [float(np.mean(np.sin(u * last))) for u in CF_GRID],
            }
        )
    stats = {"per_n": per_n, "cf_grid": list(CF_GRID)}
    verdicts = {}
    target = target_exponent(config.walk, config.scenery)
    if len(config.n_grid) >= 2:
        slope, se = estimate_exponent(config.n_grid, [data[n][0] for n in config.n_grid])
        stats["exponent"] = {"estimate": slope, "stderr": se, "target": target, "abs_error": abs(slope - target)}
        verdicts["exponent"] = {"passed": abs(slope - target) <= config.exponent_tolerance, "tolerance": config.exponent_tolerance}
        ks_rows = []
        for a, b in zip(config.n_grid, config.n_grid[1:]):
            res = ks_two_sample(data[a][1][:, -1], data[b][1][:, -1], config.ks_level)
            ks_rows.append({"n1": a, "n2": b, "statistic": res.statistic, "critical_value": res.critical_value, "passed": res.passed})
        stats["self_consistency"] = ks_rows
        verdicts["self_consistency"] = {"passed": ks_rows[-1]["passed"], "level": config.ks_level, "pair": [ks_rows[-1]["n1"], ks_rows[-1]["n2"]]}
    return ExperimentReport("replicates", describe(config), stats, verdicts, _provenance(config))


# -- local-time diagnostics -------------------------------------------------


def _support_window(positions: np.ndarray, a_n: float) -> float:
    return max(2.0, math.ceil((np.abs(positions).max() + 1) / a_n))


def _combined_local_time(path, n, a_n, t_grid, weights) -> StepFunction:
    field_ = accumulate(path)
    return combine(weights, [rescale(field_, n, a_n, t) for t in t_grid])


def wlln_diagnostic(
    walk: WalkSpec,
    n_grid,
    walkers,
    t_grid=(1.0,),
    weights=(1.0,),
    p: float = 2.0,
    seed: int = 0,
    batches: int = 16,
    reference_count: int = 1024,
    smoothing: float = 1.0 / 16,
    workers=None,
) -> dict:
    """Gap between averaged local times of ``c`` walkers and a high-``n`` reference mean.

    ``n_grid`` and ``walkers`` are paired; a single ``n`` is broadcast over the
    walker schedule. Each gap is ``(mean over batches of ||avg - ref||_p^p)^(1/p)``.
    """
    walkers = list(walkers)
    n_grid = list(n_grid) if np.ndim(n_grid) else [int(n_grid)]
    if len(n_grid) == 1:
        n_grid = n_grid * len(walkers)
    if len(n_grid) != len(walkers):
        raise ValueError("n_grid and walker schedule must pair up")
    if not (1.0 <= p <= 2.0):
        raise ValueError("p must lie in [1, 2]")
    n_ref = max(n_grid)
    a_ref = float(scaling_for(walk)(n_ref))
    ref_seed = SeedSpec(seed, REFERENCE_STREAM)

    if all(w == 0 for w in weights):
        reference = StepFunction.zero()
    else:
        def ref_member(i):
            path = generate_walk(walk, n_ref, derive_stream(ref_seed, lane=i))
            return _combined_local_time(path, n_ref, a_ref, t_grid, weights)

        members = map_ordered(ref_member, range(reference_count), workers)
        reference = _mean_steps(members).cell_average(smoothing)

    rows = []
    for g, (n, c) in enumerate(zip(n_grid, walkers)):
        a_n = float(scaling_for(walk)(n))

        def batch_gap(b, g=g, n=n, c=c, a_n=a_n):
            s = SeedSpec(seed, b)
            paths = [generate_walk(walk, n, derive_stream(s, lane=(g << 32) + i)) for i in range(c)]
            avg = _mean_steps([_combined_local_time(q, n, a_n, t_grid, weights) for q in paths])
            return (avg - reference).power_integral(p)

        vals = np.array(map_ordered(batch_gap, range(batches), workers))
        rows.append(
            {
                "n": n,
                "walkers": c,
                "gap": float(vals.mean() ** (1.0 / p)),
                "gap_p_mean": float(vals.mean()),
                "gap_p_stderr": float(vals.std(ddof=1) / math.sqrt(batches)) if batches > 1 else float("nan"),
            }
        )
    return {"rows": rows, "reference": {"n": n_ref, "count": reference_count, "smoothing": smoothing}, "p": p}


def _mean_steps(fns) -> StepFunction:
    """Pointwise mean of lattice step functions sharing the same cell width."""
    fns = [f for f in fns]
    nonempty = [f for f in fns if len(f)]
    if not nonempty:
        return StepFunction.zero()
    pts = np.unique(np.concatenate([f.breaks for f in nonempty]))
    left = pts[:-1]
    total = np.zeros(len(left))
    for f in nonempty:
        total += f(left)
    return StepFunction(pts, total / len(fns))


def rw2_diagnostics(
    walk: WalkSpec,
    n_grid,
    p: float = 2.0,
    delta_grid=(0.5, 0.25, 0.125, 0.0625),
    replicates: int = 500,
    t: float = 1.0,
    M: float | None = None,
    seed: int = 0,
    workers=None,
) -> dict:
    """Empirical ``int_[-M,M] E|L_n(t,x) - L_n(t,[x]_delta)|^p dx`` over ``n`` and ``delta``.

    Also records ``int E|L_n|^p`` and ``sup_x E|L_n(t,x)|^p`` per ``n``.
    """
    n_grid = list(n_grid)
    delta_grid = list(delta_grid)
    table = np.zeros((len(n_grid), len(delta_grid)))
    table_se = np.zeros_like(table)
    mass, sup_moment = [], []
    for g, n in enumerate(n_grid):
        a_n = float(scaling_for(walk)(n))

        def one(r, g=g, n=n, a_n=a_n):
            path = generate_walk(walk, n, derive_stream(SeedSpec(seed, r), lane=g << 32))
            lt = rescale(accumulate(path), n, a_n, t)
            f = lt.to_step()
            m = M if M is not None else _support_window(path.positions, a_n)
            win = (-m, m)
            diffs = [(f - f.coarsen(d)).power_integral(p, win) for d in delta_grid]
            vals = a_n / n * lt.field.counts.astype(float)
            return diffs, f.power_integral(p, win), lt.field.sites, vals**p

        rows = map_ordered(one, range(replicates), workers)
        d = np.array([r[0] for r in rows])
        table[g] = d.mean(axis=0)
        table_se[g] = d.std(axis=0, ddof=1) / math.sqrt(replicates)
        mass.append(float(np.mean([r[1] for r in rows])))
        sites = np.concatenate([r[2] for r in rows])
        vals = np.concatenate([r[3] for r in rows])
        lo = sites.min()
        pointwise = np.bincount(sites - lo, weights=vals) / replicates
        sup_moment.append(float(pointwise.max()))

    colmax_idx = table.argmax(axis=0)
    colmax = table.max(axis=0)
    colmax_se = table_se[colmax_idx, np.arange(len(delta_grid))]
    monotone = all(
        colmax[j + 1] <= colmax[j] + 2.0 * math.hypot(colmax_se[j], colmax_se[j + 1])
        for j in range(len(delta_grid) - 1)
    )
    rate = fit_power_law(delta_grid, colmax).exponent if len(delta_grid) >= 2 and colmax.min() > 0 else float("nan")
    return {
        "n_grid": n_grid,
        "delta_grid": delta_grid,
        "p": p,
        "table": table.tolist(),
        "table_stderr": table_se.tolist(),
        "column_max": colmax.tolist(),
        "column_max_stderr": colmax_se.tolist(),
        "column_max_monotone": monotone,
        "column_min": table.min(axis=0).tolist(),
        "delta_rate": rate,
        "lp_mass": mass,
        "sup_moment": sup_moment,
        "sup_moment_growth": max(sup_moment) / min(sup_moment) if min(sup_moment) > 0 else float("inf"),
    }


# -- scenery diagnostics ----------------------------------------------------


def rs2_variance_check(
    scenery: ScenerySpec,
    f: StepFunction,
    h_grid,
    replicates: int = 10_000,
    seed: int = 0,
    workers=None,
) -> dict:
    """``Var(mu_h[f]) / <f, f>_W`` across the mesh grid for a moving-average scenery.

    ``mu_h[f]`` is evaluated as an exact linear functional of the innovations,
    with weights computed once per mesh.
    """
    if not isinstance(scenery, MovingAverage):
        raise ValueError("the variance check needs a square-integrable moving-average scenery")
    model = limit_model(scenery)
    limit = limit_inner_product(model, f, f)
    rows = []
    for g, h in enumerate(h_grid):
        probe = Scenery(scenery, SeedSpec(seed, 0), tag=g)
        k0, v = RandomMeasure(probe, h).cell_weights(f)
        if len(v) == 0 or limit == 0:
            rows.append({"h": h, "variance": 0.0, "limit": limit, "ratio": None, "status": "degenerate"})
            continue
        i0, u = innovation_weights(scenery, k0, v)
        hi = i0 + len(u) - 1

        def one(r, g=g, i0=i0, hi=hi, u=u):
            sc = Scenery(scenery, SeedSpec(seed, r), tag=g)
            return float(np.dot(u, sc.innovations(i0, hi)))

        vals = np.array(map_ordered(one, range(replicates), workers))
        var = float(np.var(vals, ddof=1))
        ratio = var / limit
        rows.append(
            {
                "h": h,
                "variance": var,
                "limit": limit,
                "ratio": ratio,
                "ratio_stderr": ratio * math.sqrt(2.0 / (replicates - 1)),
                "status": "ok",
            }
        )
    ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
    return {
        "model": describe(model),
        "rows": rows,
        # empirical constant in the L^2 domination of mu_h[f] by W[f]
        "rs2c_ratio_max": math.sqrt(max(ratios)) if ratios else None,
    }
