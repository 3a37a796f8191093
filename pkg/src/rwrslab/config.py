"""TOML run configuration with a versioned schema.

Layout::

    schema = 1

    [walk]
    kind = "simple"          # "simple" | "stable" | "correlated"
    alpha = 2.0              # stable: index, scale, skewness, rounding
    hurst = 0.7              # correlated

    [scenery]
    kind = "iid"             # "iid" | "summable" | "power_decay"
    beta = 2.0               # iid: beta, scale, skewness
    coefficients = [1.0]     # summable: coefficients, first_lag
    gamma = 0.75             # power_decay: gamma, p1, p2, radius
    innovation_std = 1.0     # moving averages

    [run]
    seed = 0
    n = 1024
    ...

Unknown keys anywhere are errors; every error carries the line of the
offending key when it can be located.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import tomli

from .experiments import ExperimentConfig
from .sampling import StableParams
from .scenery import IidStable, MovingAverage, PowerDecay, Summable
from .stepfn import StepFunction
from .walks import CorrelatedGaussian, StableIncrements, simple_walk

SCHEMA_VERSION = 1

WALK_KEYS = {
    "simple": set(),
    "stable": {"alpha", "scale", "skewness", "rounding"},
    "correlated": {"hurst"},
}
SCENERY_KEYS = {
    "iid": {"beta", "scale", "skewness"},
    "summable": {"coefficients", "first_lag", "innovation_std"},
    "power_decay": {"gamma", "p1", "p2", "radius", "innovation_std"},
}
RUN_DEFAULTS = {
    "seed": 0,
    "n": 1024,
    "replicates": 8,
    "n_grid": [256, 512, 1024, 2048],
    "t_grid": [1.0],
    "weights": [1.0],
    "p": 2.0,
    "walkers": [4, 16, 64],
    "delta_grid": [0.5, 0.25, 0.125, 0.0625],
    "h_grid": [2.0**-8, 2.0**-10, 2.0**-12],
    "exponent_tolerance": 0.05,
    "ks_level": 0.01,
    "batches": 16,
    "reference_count": 1024,
    "smoothing": 1.0 / 16,
    "test_function": [[0.0, 1.0, 1.0]],
    "scaling_factors": [0.5, 2.0, 3.0],
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class RunSettings:
    walk: object
    scenery: object
    seed: int
    n: int
    replicates: int
    batches: int
    reference_count: int
    smoothing: float
    test_function: StepFunction
    scaling_factors: tuple
    experiment_fields: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    source: str = ""

    def locate(self, table: str, key: str | None = None) -> int | None:
        return _Locator(self.source)(table, key)

    def experiment(self) -> ExperimentConfig:
        """Monte Carlo configuration; its stricter checks (e.g. two or more replicates) apply here."""
        fields = dict(self.experiment_fields, replicates=self.replicates)
        try:
            return ExperimentConfig(walk=self.walk, scenery=self.scenery, seed=self.seed, **fields)
        except ValueError as exc:
            msg = str(exc)
            key = next((k for k in fields if k in msg), None)
            raise ConfigError(msg, self.locate("run", key)) from None


class _Locator:
    """Maps ``(table, key)`` to the 1-based line where the key is assigned."""

    _header = re.compile(r"^\s*\[([^\[\]]+)\]\s*(#.*)?$")
    _assign = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")

    def __init__(self, text: str):
        self.lines = {}
        self.tables = {}
        table = ""
        for i, line in enumerate(text.splitlines(), start=1):
            m = self._header.match(line)
            if m:
                table = m.group(1).strip()
                self.tables.setdefault(table, i)
                continue
            m = self._assign.match(line)
            if m:
                self.lines.setdefault((table, m.group(1)), i)

    def __call__(self, table: str, key: str | None = None) -> int | None:
        if key is None:
            return self.tables.get(table)
        return self.lines.get((table, key), self.tables.get(table))


def _section(doc: dict, name: str, where: _Locator) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table", where("", name))
    return sec


def _check_keys(sec: dict, allowed: set, table: str, where: _Locator):
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{table}]", where(table, key))


def _number(sec, key, default, table, where, kind=float):
    val = sec.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{table}.{key} must be a number", where(table, key))
    if kind is int:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(f"{table}.{key} must be an integer", where(table, key))
        return int(val)
    return float(val)


def _numbers(sec, key, default, table, where, kind=float) -> tuple:
    val = sec.get(key, default)
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{table}.{key} must be a non-empty array", where(table, key))
    return tuple(_number({key: v}, key, None, table, where, kind) for v in val)


def _guard(where_line, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), where_line) from None


def _walk(sec: dict, where: _Locator):
    kind = sec.get("kind", "simple")
    if kind not in WALK_KEYS:
        raise ConfigError(f"unknown walk kind {kind!r}; expected one of {sorted(WALK_KEYS)}", where("walk", "kind"))
    _check_keys(sec, WALK_KEYS[kind] | {"kind"}, "walk", where)
    if kind == "simple":
        return simple_walk()
    if kind == "correlated":
        hurst = _number(sec, "hurst", 0.5, "walk", where)
        return _guard(where("walk", "hurst"), CorrelatedGaussian, hurst)
    alpha = _number(sec, "alpha", 2.0, "walk", where)
    params = _guard(
        where("walk", "alpha"),
        StableParams,
        alpha,
        _number(sec, "scale", 1.0, "walk", where),
        _number(sec, "skewness", 0.0, "walk", where),
    )
    return _guard(where("walk", "rounding"), StableIncrements, params, rounding=sec.get("rounding", "nearest"))


def _scenery(sec: dict, where: _Locator):
    kind = sec.get("kind", "iid")
    if kind not in SCENERY_KEYS:
        raise ConfigError(f"unknown scenery kind {kind!r}; expected one of {sorted(SCENERY_KEYS)}", where("scenery", "kind"))
    _check_keys(sec, SCENERY_KEYS[kind] | {"kind"}, "scenery", where)
    if kind == "iid":
        beta = _number(sec, "beta", 2.0, "scenery", where)
        params = _guard(
            where("scenery", "beta"),
            StableParams,
            beta,
            _number(sec, "scale", 1.0, "scenery", where),
            _number(sec, "skewness", 0.0, "scenery", where),
        )
        return IidStable(params)
    std = _number(sec, "innovation_std", 1.0, "scenery", where)
    if kind == "summable":
        kernel = _guard(
            where("scenery", "coefficients"),
            Summable,
            _numbers(sec, "coefficients", [1.0], "scenery", where),
            _number(sec, "first_lag", 0, "scenery", where, int),
        )
    else:
        kernel = _guard(
            where("scenery", "gamma"),
            PowerDecay,
            _number(sec, "gamma", 0.75, "scenery", where),
            _number(sec, "p1", 1.0, "scenery", where),
            _number(sec, "p2", 1.0, "scenery", where),
            _number(sec, "radius", 100_000, "scenery", where, int),
        )
    return _guard(where("scenery", "innovation_std"), MovingAverage, kernel, std)


def _test_function(rows, where: _Locator) -> StepFunction:
    line = where("run", "test_function")
    if not isinstance(rows, list) or not all(isinstance(r, list) and len(r) == 3 for r in rows):
        raise ConfigError("run.test_function must be an array of [lo, hi, value] triples", line)
    f = StepFunction.zero()
    for lo, hi, val in rows:
        if not hi > lo:
            raise ConfigError("run.test_function intervals need lo < hi", line)
        f = f + StepFunction.indicator(float(lo), float(hi), float(val))
    return f


def parse_config(text: str, seed: int | None = None) -> RunSettings:
    """Parse TOML text into run settings; ``seed`` overrides ``run.seed``."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed TOML: {exc}", int(m.group(1)) if m else None) from None
    where = _Locator(text)
    for key in doc:
        if key not in ("schema", "walk", "scenery", "run"):
            raise ConfigError(f"unknown top-level key {key!r}", where("", key) or where(key))
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema must be {SCHEMA_VERSION}, got {doc.get('schema')!r}", where("", "schema"))
    walk = _walk(_section(doc, "walk", where), where)
    scenery = _scenery(_section(doc, "scenery", where), where)
    run = _section(doc, "run", where)
    _check_keys(run, set(RUN_DEFAULTS), "run", where)

    def num(key, kind=float):
        return _number(run, key, RUN_DEFAULTS[key], "run", where, kind)

    def nums(key, kind=float):
        return _numbers(run, key, RUN_DEFAULTS[key], "run", where, kind)

    run_seed = num("seed", int) if seed is None else int(seed)
    if not 0 <= run_seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", where("run", "seed"))
    exp_keys = {
        "n_grid": nums("n_grid", int),
        "replicates": num("replicates", int),
        "t_grid": nums("t_grid"),
        "weights": nums("weights"),
        "p": num("p"),
        "walkers": nums("walkers", int),
        "delta_grid": nums("delta_grid"),
        "h_grid": nums("h_grid"),
        "exponent_tolerance": num("exponent_tolerance"),
        "ks_level": num("ks_level"),
    }
    replicates = exp_keys.pop("replicates")
    if replicates < 1:
        raise ConfigError("run.replicates must be positive", where("run", "replicates"))
    n = num("n", int)
    if n < 1:
        raise ConfigError("run.n must be positive", where("run", "n"))
    batches = num("batches", int)
    if batches < 2:
        raise ConfigError("run.batches must be at least 2", where("run", "batches"))
    reference_count = num("reference_count", int)
    if reference_count < 1:
        raise ConfigError("run.reference_count must be positive", where("run", "reference_count"))
    smoothing = num("smoothing")
    if not smoothing > 0:
        raise ConfigError("run.smoothing must be positive", where("run", "smoothing"))
    factors = nums("scaling_factors")
    if any(c <= 0 for c in factors):
        raise ConfigError("run.scaling_factors must be positive", where("run", "scaling_factors"))
    settings = RunSettings(
        walk=walk,
        scenery=scenery,
        seed=run_seed,
        n=n,
        replicates=replicates,
        batches=batches,
        reference_count=reference_count,
        smoothing=smoothing,
        test_function=_test_function(run.get("test_function", RUN_DEFAULTS["test_function"]), where),
        scaling_factors=factors,
        experiment_fields=exp_keys,
        raw=doc,
        source=text,
    )
    if replicates >= 2:
        settings.experiment()
    return settings


def load_config(path, seed: int | None = None) -> RunSettings:
    """Read and parse a config file. ``OSError`` propagates unchanged."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config is not valid UTF-8: {exc}") from None
    return parse_config(text, seed)


def default_settings(seed: int | None = None) -> RunSettings:
    return parse_config(f"schema = {SCHEMA_VERSION}\n", seed)
