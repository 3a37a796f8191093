"""Command-line front end.

Exit codes: 0 success, 1 hard invariant failure (or a soft verdict under
``--strict``), 2 configuration error, 3 I/O failure, 4 too few replicates
under ``--strict``.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .config import ConfigError, RunSettings, default_settings, load_config
from .experiments import (
    describe,
    estimate_exponent,
    map_ordered,
    run_replicates,
    rs2_variance_check,
    rw2_diagnostics,
    wlln_diagnostic,
)
from .local_time import accumulate, discrete_time, rescale
from .process import default_t_grid, identity_sides, _relative
from .sampling import SeedSpec, derive_stream
from .scenery import MovingAverage, Scenery, scaling_check
from .walks import generate_walk, scaling_for

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_IO, EXIT_REPLICATES = 0, 1, 2, 3, 4

IDENTITY_TOL = 1e-9
SCALING_TOL = 1e-12
MIN_REPLICATES = {"verify": 500, "exponent": 200, "rs2check": 1000, "wlln": 0}


class InsufficientReplicates(Exception):
    pass


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _replicate(settings: RunSettings, r: int, n: int | None = None):
    seed = SeedSpec(settings.seed, r)
    path = generate_walk(settings.walk, settings.n if n is None else n, derive_stream(seed))
    return path, Scenery(settings.scenery, seed)


def _require(settings: RunSettings, command: str, strict: bool):
    need = MIN_REPLICATES[command]
    have = settings.replicates
    if strict and have < need:
        raise InsufficientReplicates(f"insufficient replicates: {command} needs at least {need} under --strict, got {have}")


# -- commands ---------------------------------------------------------------


def cmd_simulate(settings: RunSettings, out: Path, args) -> tuple[int, list]:
    files = []
    reps = settings.replicates
    for r in range(reps):
        suffix = "" if reps == 1 else f"_r{r:04d}"
        path, scenery = _replicate(settings, r)
        pos = path.positions
        steps = np.arange(len(pos))
        sites = np.arange(pos.min(), pos.max() + 1)
        files.append(io.write_csv(out / f"walk{suffix}.csv", "walk", steps, pos, integer_values=True))
        files.append(io.write_csv(out / f"scenery{suffix}.csv", "scenery", sites, scenery.take(sites)))
        files.append(io.write_csv(out / f"rwrs{suffix}.csv", "rwrs", steps, np.cumsum(scenery.take(pos))))
    print(f"simulate: wrote {len(files)} trace files to {out}")
    return EXIT_OK, files


def _hard_checks(settings: RunSettings, args) -> dict:
    exp = settings.experiment()
    n = settings.n
    t_grid = np.array(sorted(set(default_t_grid().tolist()) | {t for t in exp.t_grid if t <= 1.0}))
    a_n = float(scaling_for(exp.walk)(n))

    def one(r):
        path, scenery = _replicate(settings, r)
        d, m, s = identity_sides(path, scenery, t_grid)
        gap = max(_relative(x, y, z) for x, y, z in zip(d, m, s))
        field = accumulate(path)
        mass_ok = all(
            rescale(field, n, a_n, t).mass() == Fraction(discrete_time(n, t) + 1, n) for t in t_grid
        )
        return gap, mass_ok

    rows = map_ordered(one, range(exp.replicates), args.threads)
    identity = max(g for g, _ in rows)
    mass_ok = all(ok for _, ok in rows)

    _, scenery = _replicate(settings, 0)
    worst = 0.0
    for h in exp.h_grid:
        for c in settings.scaling_factors:
            lhs, rhs = scaling_check(scenery, h, settings.test_function, c)
            if args.inject_fault == "scaling":
                # negative control: spurious factor 1/c on the right-hand side
                rhs = rhs / c
            denom = max(abs(lhs), abs(rhs))
            worst = max(worst, 0.0 if denom == 0 else abs(lhs - rhs) / denom)
    return {
        "identity": {"max_relative_discrepancy": identity, "tolerance": IDENTITY_TOL, "passed": identity <= IDENTITY_TOL},
        "scaling_relation": {"max_relative_discrepancy": worst, "tolerance": SCALING_TOL, "passed": worst <= SCALING_TOL},
        "mass_conservation": {"exact": True, "passed": mass_ok},
    }


def cmd_verify(settings: RunSettings, out: Path, args) -> tuple[int, list]:
    _require(settings, "verify", args.strict)
    exp = settings.experiment()
    hard = _hard_checks(settings, args)

    rw2 = rw2_diagnostics(exp.walk, exp.n_grid, exp.p, exp.delta_grid, exp.replicates, seed=exp.seed, workers=args.threads)
    soft = {"rw2_trend": {"passed": rw2["column_max_monotone"], "noise_band": "2 standard errors"}}
    report = {"hard": hard, "rw2": rw2}
    if isinstance(exp.scenery, MovingAverage):
        rs2 = rs2_variance_check(exp.scenery, settings.test_function, exp.h_grid, exp.replicates, exp.seed, args.threads)
        report["rs2"] = rs2
        last = rs2["rows"][-1]
        if last["status"] == "ok":
            band = 0.1 + 3 * last["ratio_stderr"]
            soft["rs2_ratio"] = {"passed": abs(last["ratio"] - 1.0) <= band, "band": band}
    report["soft"] = soft

    path, _ = _replicate(settings, 0)
    lt = rescale(accumulate(path), settings.n, float(scaling_for(exp.walk)(settings.n)), min(exp.t_grid[-1], 1.0))
    vals = lt.a_n / lt.n * lt.field.counts
    files = [
        io.write_csv(out / "local_time.csv", "local_time", lt.field.sites, vals),
        io.write_json(out / "report.json", _report("verify", settings, report)),
    ]
    hard_ok = all(v["passed"] for v in hard.values())
    soft_ok = all(v["passed"] for v in soft.values())
    print(f"verify: identity {hard['identity']['max_relative_discrepancy']:.3e}, "
          f"scaling {hard['scaling_relation']['max_relative_discrepancy']:.3e}, "
          f"mass {'ok' if hard['mass_conservation']['passed'] else 'FAILED'}, soft {'ok' if soft_ok else 'failed'}")
    if not hard_ok or (args.strict and not soft_ok):
        return EXIT_INVARIANT, files
    return EXIT_OK, files


def _synthetic_samples(ns, replicates: int, exponent: float) -> list:
    base = np.linspace(-1.0, 1.0, replicates)
    return [base * float(n) ** exponent for n in ns]


def cmd_exponent(settings: RunSettings, out: Path, args) -> tuple[int, list]:
    exp = settings.experiment()
    if len(exp.n_grid) < 2:
        raise ConfigError("exponent needs at least two n_grid points to regress", settings.locate("run", "n_grid"))
    if args.strict and len(exp.n_grid) < 4:
        raise InsufficientReplicates("insufficient grid: exponent needs at least 4 n_grid points under --strict")
    _require(settings, "exponent", args.strict)
    if args.inject_synthetic is not None:
        slope, se = estimate_exponent(exp.n_grid, _synthetic_samples(exp.n_grid, exp.replicates, args.inject_synthetic))
        target = args.inject_synthetic
        body = {"mode": "synthetic", "exponent": {"estimate": slope, "stderr": se, "target": target, "abs_error": abs(slope - target)}}
        verdicts = {"exponent": {"passed": abs(slope - target) <= exp.exponent_tolerance, "tolerance": exp.exponent_tolerance}}
    else:
        rep = run_replicates(exp, args.threads)
        body = {"mode": "simulation", **rep.statistics}
        verdicts = rep.verdicts
    body["verdicts"] = verdicts
    files = [io.write_json(out / "report.json", _report("exponent", settings, body))]
    e = body["exponent"]
    print(f"exponent: estimate {e['estimate']:.6f} +- {e['stderr']:.2g}, target {e['target']:.6f}")
    soft_ok = all(v["passed"] for v in verdicts.values())
    return (EXIT_INVARIANT if args.strict and not soft_ok else EXIT_OK), files


def cmd_wlln(settings: RunSettings, out: Path, args) -> tuple[int, list]:
    exp = settings.experiment()
    ns = exp.n_grid if len(exp.n_grid) == len(exp.walkers) else (exp.n_grid[-1],)
    res = wlln_diagnostic(
        exp.walk, ns, exp.walkers, exp.t_grid, exp.weights, exp.p, exp.seed,
        batches=settings.batches, reference_count=settings.reference_count,
        smoothing=settings.smoothing, workers=args.threads,
    )
    gaps = [r["gap"] for r in res["rows"]]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    res["verdicts"] = {"decreasing": {"passed": decreasing}}
    files = [io.write_json(out / "report.json", _report("wlln", settings, res))]
    print("wlln: gaps " + ", ".join(f"{g:.4g}" for g in gaps))
    return (EXIT_INVARIANT if args.strict and not decreasing else EXIT_OK), files


def cmd_rs2check(settings: RunSettings, out: Path, args) -> tuple[int, list]:
    exp = settings.experiment()
    if not isinstance(exp.scenery, MovingAverage):
        raise ConfigError("rs2check needs a moving-average scenery (kind = summable or power_decay)", settings.locate("scenery", "kind"))
    _require(settings, "rs2check", args.strict)
    res = rs2_variance_check(exp.scenery, settings.test_function, exp.h_grid, exp.replicates, exp.seed, args.threads)
    last = res["rows"][-1]
    ok = last["status"] != "ok" or abs(last["ratio"] - 1.0) <= 0.1 + 3 * last["ratio_stderr"]
    res["verdicts"] = {"finest_mesh_ratio": {"passed": ok}}
    files = [io.write_json(out / "report.json", _report("rs2check", settings, res))]
    print("rs2check: ratios " + ", ".join("degenerate" if r["ratio"] is None else f"{r['ratio']:.4f}" for r in res["rows"]))
    return (EXIT_INVARIANT if args.strict and not ok else EXIT_OK), files


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "exponent": cmd_exponent,
    "wlln": cmd_wlln,
    "rs2check": cmd_rs2check,
}


# -- plumbing ---------------------------------------------------------------


def _report(kind: str, settings: RunSettings, body: dict) -> dict:
    return {
        "kind": kind,
        "config": describe(settings.experiment()),
        "settings": {
            "n": settings.n,
            "batches": settings.batches,
            "reference_count": settings.reference_count,
            "smoothing": settings.smoothing,
            "test_function": {"breaks": settings.test_function.breaks, "values": settings.test_function.values},
            "scaling_factors": settings.scaling_factors,
        },
        "results": body,
        "provenance": {"seed": settings.seed, "code_version": __version__, "replicate_streams": "replicate r uses stream_id r"},
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwrs", description="Random walk in random scenery experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML config; built-in defaults when omitted")
        p.add_argument("--out", type=Path, default=Path("rwrs-out"), help="output directory")
        p.add_argument("--seed", type=int, help="master seed, overrides run.seed")
        p.add_argument("--strict", action="store_true", help="statistical verdicts and replicate minima affect the exit status")
        p.add_argument("--threads", type=int, help="worker threads (default: RWRS_THREADS or core count)")
        p.add_argument("--inject-fault", choices=["scaling"], help=argparse.SUPPRESS)
        p.add_argument("--inject-synthetic", type=float, metavar="EXPONENT", help=argparse.SUPPRESS)
    return parser


def _load(args) -> RunSettings:
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    if args.config is None:
        return default_settings(args.seed)
    return load_config(args.config, args.seed)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    started = _utc_now()
    try:
        settings = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        code, files = COMMANDS[args.command](settings, args.out, args)
        manifest = {
            "tool": "rwrslab",
            "version": __version__,
            "command": args.command,
            "seed": settings.seed,
            "walk": describe(settings.walk),
            "scenery": describe(settings.scenery),
            "config_source": settings.raw,
            "started": started,
            "finished": _utc_now(),
            "exit_code": code,
            "files": io.inventory(files),
        }
        io.write_json(args.out / "manifest.json", manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientReplicates as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_REPLICATES
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
