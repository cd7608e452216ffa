"""Experiment configs, dispatch and report writing.

A config is a JSON object::

    {"system": <system object or builtin name>,
     "experiment": "<kind>",
     "params": {...},
     "seed": 0,
     "output": {"dir": "out"}}

Everything is validated before any computation.  Reports are written to a
scratch directory next to the target and moved into place only on success, so
a failed run leaves no partial tables.  Tables and ``report.json`` depend only
on the config (wall time goes to ``run.log``).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import shutil
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .system import BudgetError, ConfigError, ExpandingToralSystem, doubling_map, full_grid, make_system, parse_rational, s3_carpet

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3

BUILTIN_SYSTEMS: dict[str, Callable[[], ExpandingToralSystem]] = {
    "doubling": doubling_map,
    "full-grid": full_grid,
    "s3": s3_carpet,
}


def resolve_system(spec: Any, path: str = "system") -> ExpandingToralSystem:
    if isinstance(spec, str):
        if spec in BUILTIN_SYSTEMS:
            return BUILTIN_SYSTEMS[spec]()
        p = Path(spec)
        if p.exists():
            try:
                return make_system(json.loads(p.read_text(encoding="utf-8")), path)
            except json.JSONDecodeError as exc:
                raise ConfigError(path, f"JSON parse error in {spec}: {exc}") from None
        raise ConfigError(path, f"unknown builtin system or missing file {spec!r}")
    return make_system(spec, path)


# -- parameter schemas -------------------------------------------------------------------


def _check(kind: str, value: Any, path: str) -> Any:
    if kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if kind == "posint":
        v = _check("int", value, path)
        if v < 1:
            raise ConfigError(path, f"must be >= 1, got {v}")
        return v
    if kind == "float":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if kind == "rational":
        return parse_rational(value, path)
    if kind == "intlist":
        if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ConfigError(path, "expected a list of integers")
        return value
    if kind == "range":
        if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)) or value[0] > value[1]:
            raise ConfigError(path, "expected [first, last] with first <= last")
        return list(range(value[0], value[1] + 1))
    if kind == "radii":
        from .radii import radii_from_config

        return radii_from_config(value, path)
    if kind == "point":
        if value == "sample":
            return value
        if not isinstance(value, list):
            raise ConfigError(path, "expected 'sample' or a list of rational coordinates")
        return tuple(parse_rational(v, f"{path}[{i}]") for i, v in enumerate(value))
    raise AssertionError(kind)


def validate_params(schema: dict[str, tuple[str, Any]], params: Any, path: str = "params") -> dict[str, Any]:
    if params is None:
        params = {}
    if not isinstance(params, dict):
        raise ConfigError(path, "expected an object")
    for key in params:
        if key not in schema:
            raise ConfigError(f"{path}.{key}", "unknown key")
    out = {}
    for key, (kind, default) in schema.items():
        if key in params:
            out[key] = _check(kind, params[key], f"{path}.{key}")
        elif default is None:
            raise ConfigError(f"{path}.{key}", "missing")
        else:
            out[key] = _check(kind, default, f"{path}.{key}")
    return out


# -- experiments ---------------------------------------------------------------------------


@dataclass
class Result:
    tables: dict[str, tuple[list[str], list[list[Any]]]]
    summary: dict[str, Any]


def _hitting_sweep(system, p, seed, jobs) -> Result:
    from .hitting import sweep_hitting

    res = sweep_hitting(system, p["pairs"], p["k"], seed, p["eps"], jobs)
    qcols = ["k", "pairs", "found", "undefined", "q25", "median", "q75", "max_bracket_width"]
    rec_rows = [
        [i, r.k, r.tau, r.horizon, r.mu.lower, r.mu.upper, r.ratio]
        for i, recs in enumerate(res.records)
        for r in recs
    ]
    pooled = res.row("all")
    return Result(
        {
            "hitting_quantiles": (qcols, [[row[c] for c in qcols] for row in res.rows]),
            "hitting_records": (["pair", "k", "tau", "horizon", "mu_lower", "mu_upper", "ratio"], rec_rows),
        },
        {"median": pooled["median"], "q25": pooled["q25"], "q75": pooled["q75"], "pairs": p["pairs"], "found": pooled["found"]},
    )


def _hitting_profile(system, p, seed, jobs) -> Result:
    from .hitting import hitting_ratio_profile, sample_pair

    x, y, mus = sample_pair(system, p["k"], p["eps"], seed, p["pair"])
    recs = hitting_ratio_profile(x, y, p["k"], p["eps"], mus)
    rows = [[r.k, r.tau, r.horizon, r.mu.lower, r.mu.upper, r.ratio, r.truncated] for r in recs]
    return Result({"hitting_profile": (["k", "tau", "horizon", "mu_lower", "mu_upper", "ratio", "truncated"], rows)}, {"pair": p["pair"]})


def _cover_slope(system, p, seed, jobs) -> Result:
    from .covering import dimension_slope, octave_window
    from .orbit import window_width
    from .system import sample_point

    radii = p["radii"]
    last = max(octave_window(radii, system.m, j)[1] for j in p["scales"])
    x = sample_point(system, max(last, 1) + window_width(system.n) + 2, seed, 0)
    fit = dimension_slope(x, radii, p["scales"], p["trim"])
    rows = [[c.scale, c.count, math.log(c.count) if c.count else None] for c in fit.counts]
    return Result(
        {"cover_counts": (["scale", "count", "log_count"], rows)},
        {"slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept, "used_scales": fit.used, "dropped_scales": fit.dropped},
    )


def _x_for_horizon(system, horizon, seed):
    from .orbit import window_width
    from .system import sample_point

    # stream 2**32 keeps the orbit point clear of target streams 0, 1, 2, ...
    return sample_point(system, horizon + window_width(system.n) + 2, seed, 2**32)


def _cover_fraction(system, p, seed, jobs) -> Result:
    from .covering import coverage_fraction

    x = _x_for_horizon(system, p["horizon"], seed)
    res = coverage_fraction(system, x, p["radii"], p["samples"], p["horizon"], seed)
    rows = [[i, int(c)] for i, c in enumerate(res.covered)]
    return Result({"coverage": (["sample", "covered"], rows)}, {"fraction": res.fraction, "window": list(res.window)})


def _cover_theta(system, p, seed, jobs) -> Result:
    from .covering import theta_sequence

    x = _x_for_horizon(system, max(p["indices"]) + 600, seed)
    res = theta_sequence(x, system, p["indices"], p["tolerance"])
    rows = [[b.n, b.theta_lo, b.theta_hi, b.precise] for b in res]
    return Result({"theta": (["n", "theta_lo", "theta_hi", "precise"], rows)}, {"count": len(rows)})


def _mtp_check(system, p, seed, jobs) -> Result:
    from .covering import mass_transference_check

    x = _x_for_horizon(system, p["horizon"], seed)
    rep = mass_transference_check(x, p["radii"], p["s"], p["delta"], p["samples"], seed, p["horizon"], p["indices"])
    return Result({}, rep)


def _mixing_certify(system, p, seed, jobs) -> Result:
    from .mixing import adic_cells, cylinder_unions, derived_bound, mixing_certificate

    bound = derived_bound(system, p["kappa"])
    rep = mixing_certificate(
        system,
        range(1, p["k_max"] + 1),
        adic_cells(system, p["gen_a"]),
        cylinder_unions(system, p["gen_b"], p["b_events"], seed),
        bound,
        seed,
        jobs,
    )
    rows = [[v["k"], json.dumps(v["A"], sort_keys=True), v["B"], v["lhs"], v["rhs"]] for v in rep.violations]
    return Result({"violations": (["k", "A", "B", "lhs", "rhs"], rows)}, rep.as_dict())


def _borel_cantelli(system, p, seed, jobs) -> Result:
    from .mixing import borel_cantelli_experiment
    from .system import sample_point

    y = sample_point(system, 128, seed, 2**33) if p["y"] == "sample" else p["y"]
    rep = borel_cantelli_experiment(system, y, p["radii"], p["horizon"], p["samples"], seed, jobs)
    sums = [[n, lo, hi] for n, (lo, hi) in sorted(rep.partial_sums.items())]
    rows = [[i, h, t] for i, (h, t) in enumerate(zip(rep.hits, rep.tail_hits))]
    return Result(
        {"bc_samples": (["sample", "hits", "tail_hits"], rows), "bc_partial_sums": (["n", "sum_lower", "sum_upper"], sums)},
        {"tail_fraction": rep.tail_fraction, "tail_window": list(rep.tail_window)},
    )


def _spectrum_coarse(system, p, seed, jobs) -> Result:
    from .content import coarse_spectrum

    steps = int(round((p["h_max"] - p["h_min"]) / p["h_step"]))
    grid = [p["h_min"] + i * p["h_step"] for i in range(steps + 1)]
    tab = coarse_spectrum(system, p["generation"], p["eps"], grid)
    rows = [[r["h"], r["count"], r["exponent"] if r["count"] else None] for r in tab.rows()]
    return Result({"spectrum": (["h", "count", "exponent"], rows)}, {"total_cells": tab.total_cells, "cell_family": "approximate squares"})


def _spectrum_levels(system, p, seed, jobs) -> Result:
    from .content import level_set_histogram

    hist = level_set_histogram(system, p["generation"], p["bins"])
    rows = [[hist.edges[i], hist.edges[i + 1], hist.counts[i], hist.mass[i]] for i in range(len(hist.counts))]
    return Result({"levels": (["h_lo", "h_hi", "count", "mass"], rows)}, {"mass_mode": hist.mass_mode(), "h_min": hist.h_min, "h_max": hist.h_max})


def _measure_dimension(system, p, seed, jobs) -> Result:
    from .measure import measure_dimension

    est = measure_dimension(system, p["samples"], p["generation"], seed)
    return Result({}, {"closed_form": est.closed_form, "monte_carlo": est.monte_carlo, "stderr": est.stderr, "samples": est.samples, "generation": est.generation})


_RADII_DEFAULT = {"kind": "power", "delta": "2"}

EXPERIMENTS: dict[str, tuple[dict[str, tuple[str, Any]], Callable[..., Result]]] = {
    "hitting-sweep": ({"pairs": ("posint", 100), "k": ("range", [16, 20]), "eps": ("float", 0.1)}, _hitting_sweep),
    "hitting-profile": ({"pair": ("int", 0), "k": ("range", [16, 20]), "eps": ("float", 0.1)}, _hitting_profile),
    "cover-slope": ({"radii": ("radii", _RADII_DEFAULT), "scales": ("range", [8, 16]), "trim": ("int", 0)}, _cover_slope),
    "cover-fraction": (
        {"radii": ("radii", _RADII_DEFAULT), "horizon": ("posint", 10**6), "samples": ("posint", 200)},
        _cover_fraction,
    ),
    "cover-theta": ({"indices": ("intlist", [1024]), "tolerance": ("rational", "1/16777216")}, _cover_theta),
    "mtp-check": (
        {
            "radii": ("radii", {"kind": "power", "delta": "1"}),
            "s": ("float", 0.45),
            "delta": ("rational", "2"),
            "horizon": ("posint", 10**5),
            "samples": ("posint", 200),
            "indices": ("posint", 1000),
        },
        _mtp_check,
    ),
    "mixing-certify": (
        {"k_max": ("posint", 12), "gen_a": ("int", 3), "gen_b": ("posint", 2), "b_events": ("posint", 100), "kappa": ("rational", "2")},
        _mixing_certify,
    ),
    "borel-cantelli": (
        {"radii": ("radii", {"kind": "power", "delta": "1", "scale": "1/2"}), "horizon": ("posint", 10**6), "samples": ("posint", 200), "y": ("point", "sample")},
        _borel_cantelli,
    ),
    "spectrum-coarse": (
        {"generation": ("posint", 10), "eps": ("float", 0.02), "h_min": ("float", 0.5), "h_max": ("float", 2.5), "h_step": ("float", 0.01)},
        _spectrum_coarse,
    ),
    "spectrum-levels": ({"generation": ("posint", 12), "bins": ("posint", 40)}, _spectrum_levels),
    "measure-dimension": ({"samples": ("posint", 200), "generation": ("posint", 40)}, _measure_dimension),
}


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    system: ExpandingToralSystem
    experiment: str
    params: dict
    seed: int
    out_dir: str | None

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("ascii")).hexdigest()


def parse_config(raw: Any, seed: int | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "expected a JSON object")
    for key in raw:
        if key not in ("system", "experiment", "params", "seed", "output"):
            raise ConfigError(key, "unknown key")
    if "system" not in raw:
        raise ConfigError("system", "missing")
    system = resolve_system(raw["system"])
    kind = raw.get("experiment")
    if kind not in EXPERIMENTS:
        raise ConfigError("experiment", f"expected one of {sorted(EXPERIMENTS)}, got {kind!r}")
    params = validate_params(EXPERIMENTS[kind][0], raw.get("params"))
    raw = dict(raw)
    if seed is not None:
        raw["seed"] = seed
    s = raw.get("seed", 0)
    if not isinstance(s, int) or isinstance(s, bool) or s < 0:
        raise ConfigError("seed", f"expected a nonnegative integer, got {s!r}")
    out = raw.get("output", {})
    if not isinstance(out, dict) or any(k != "dir" for k in out):
        raise ConfigError("output", "expected an object with an optional 'dir' key")
    return ExperimentConfig(raw, system, kind, params, s, out.get("dir"))


def load_config(path: str | Path, seed: int | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"JSON parse error: {exc}") from None
    return parse_config(raw, seed)


def execute(cfg: ExperimentConfig, jobs: int = 1) -> Result:
    return EXPERIMENTS[cfg.experiment][1](cfg.system, cfg.params, cfg.seed, jobs)


# -- serialization -----------------------------------------------------------------------------


def fmt_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float) or hasattr(v, "dtype") and getattr(v, "dtype").kind == "f":
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def table_csv(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(v: Any) -> Any:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def report_json(cfg: ExperimentConfig, result: Result) -> str:
    doc = {
        "metadata": {
            "config_hash": cfg.config_hash,
            "seed": cfg.seed,
            "version": __version__,
            "experiment": cfg.experiment,
            "system": cfg.system.describe(),
        },
        "summary": _jsonable(result.summary),
        "tables": sorted(f"{name}.csv" for name in result.tables),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_report(cfg: ExperimentConfig, result: Result, out_dir: str | Path, wall_time: float) -> list[Path]:
    """Write tables and report.json atomically-per-run: all files appear or none do."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".ergolab-", dir=out_dir.parent))
    try:
        names = []
        for name, (header, rows) in result.tables.items():
            (scratch / f"{name}.csv").write_text(table_csv(header, rows), encoding="utf-8", newline="\n")
            names.append(f"{name}.csv")
        (scratch / "report.json").write_text(report_json(cfg, result), encoding="utf-8", newline="\n")
        names.append("report.json")
        (scratch / "run.log").write_text(
            f"experiment={cfg.experiment} seed={cfg.seed} config_hash={cfg.config_hash} wall_time_s={wall_time:.3f}\n",
            encoding="utf-8",
        )
        names.append("run.log")
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name in names:
            os.replace(scratch / name, out_dir / name)
            written.append(out_dir / name)
        return written
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def run(config_path: str | Path, out_dir: str | Path | None = None, jobs: int = 1, seed: int | None = None, log=None) -> int:
    """Validate, execute and write a report; returns the process exit code."""
    try:
        cfg = load_config(config_path, seed)
    except ConfigError as exc:
        if log:
            log(f"invalid config: {exc}")
        return EXIT_INVALID
    target = out_dir or cfg.out_dir or "ergolab-out"
    start = time.perf_counter()
    try:
        result = execute(cfg, jobs)
    except (ConfigError, ValueError) as exc:
        if log:
            log(f"invalid config: {exc}")
        return EXIT_INVALID
    except BudgetError as exc:
        if log:
            log(f"budget exhausted: {exc}")
        return EXIT_BUDGET
    write_report(cfg, result, target, time.perf_counter() - start)
    return EXIT_OK
