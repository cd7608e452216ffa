"""Command-line front end: ``ergolab <group> <action> [options]``.

Every experiment subcommand builds the same config object that ``ergolab run``
reads from a file, so the two paths share validation and output formatting.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .harness import (
    EXIT_BUDGET,
    EXIT_INVALID,
    EXIT_OK,
    execute,
    parse_config,
    report_json,
    resolve_system,
    run,
    table_csv,
    write_report,
)
from .system import BudgetError, ConfigError, format_rational, parse_rational


def _err(msg: str) -> None:
    print(f"ergolab: {msg}", file=sys.stderr)


def _rationals(text: str, path: str) -> list[Fraction]:
    return [parse_rational(t, path) for t in text.split(",") if t.strip()]


def _scales(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..")
        return [int(a), int(b)]
    a, b = text.split(",")
    return [int(a), int(b)]


def _interval_json(iv) -> dict[str, Any]:
    return {"lower": format_rational(iv.lower), "upper": format_rational(iv.upper), "depth": iv.depth}


def _emit(result, args, cfg=None, wall_time: float = 0.0) -> None:
    """Print a result: JSON summary with --json, else the tables as CSV (files when --out is set)."""
    if args.out and cfg is not None:
        write_report(cfg, result, args.out, wall_time)
        return
    if args.json:
        if cfg is not None:
            print(report_json(cfg, result), end="")
        else:
            print(json.dumps(result, indent=2, sort_keys=True))
        return
    if cfg is not None:
        if not result.tables:
            print(json.dumps(json.loads(report_json(cfg, result))["summary"], indent=2, sort_keys=True))
        for name, (header, rows) in result.tables.items():
            if len(result.tables) > 1:
                print(f"# {name}")
            print(table_csv(header, rows), end="")
    else:
        for k, v in result.items():
            print(f"{k}: {v}")


def _run_experiment(args, kind: str, params: dict) -> int:
    raw = {"system": args.system, "experiment": kind, "params": params, "seed": args.seed}
    cfg = parse_config(raw)
    start = time.perf_counter()
    result = execute(cfg, args.jobs)
    _emit(result, args, cfg, time.perf_counter() - start)
    return EXIT_OK


def _radii_params(args) -> dict:
    if args.radii_file:
        return json.loads(Path(args.radii_file).read_text(encoding="utf-8"))
    spec = {"kind": "power", "delta": args.delta}
    if args.radius_scale != "1":
        spec["scale"] = args.radius_scale
    return spec


# -- handlers ---------------------------------------------------------------------------------


def cmd_system(args) -> int:
    system = resolve_system(args.config)
    if args.json:
        print(json.dumps({"valid": True, "system": system.describe()}, indent=2, sort_keys=True))
    else:
        print(f"valid: dim={system.dim} bases={list(system.bases)} symbols={system.size}")
    return EXIT_OK


def cmd_measure(args) -> int:
    from .measure import ball_measure, measure_dimension, projection_measure, region_measure

    system = resolve_system(args.system)
    if args.action == "box":
        vals = _rationals(args.rect, "--rect")
        if len(vals) != 2 * system.dim:
            raise ConfigError("--rect", f"expected {2 * system.dim} endpoints")
        box = [(vals[2 * a], vals[2 * a + 1]) for a in range(system.dim)]
        out = _interval_json(region_measure(system, box, args.depth, args.closed))
    elif args.action == "ball":
        center = _rationals(args.center, "--center")
        out = _interval_json(ball_measure(system, center, parse_rational(args.radius, "--radius"), args.depth))
    elif args.action == "proj":
        a, b = _rationals(args.interval, "--interval")
        out = {"value": format_rational(projection_measure(system, args.axis, (a, b), args.closed))}
    else:
        est = measure_dimension(system, args.samples, args.gen, args.seed)
        out = {"closed_form": est.closed_form, "monte_carlo": est.monte_carlo, "stderr": est.stderr}
    if args.json:
        print(json.dumps(out, indent=2, sort_keys=True))
    else:
        for k, v in out.items():
            print(f"{k}: {v}")
    return EXIT_OK


def cmd_hitting(args) -> int:
    params = {"k": [args.k_min, args.k_max], "eps": args.eps}
    if args.action == "sweep":
        params["pairs"] = args.pairs
        return _run_experiment(args, "hitting-sweep", params)
    params["pair"] = args.pair
    return _run_experiment(args, "hitting-profile", params)


def _event(text: str) -> list[list[int]]:
    return [[int(s) for s in word.split(",")] for word in text.split(";") if word.strip()]


def cmd_mixing(args) -> int:
    if args.action == "certify":
        params = {"k_max": args.k_max, "gen_a": args.gen_a, "gen_b": args.gen_b, "b_events": args.b_events}
        return _run_experiment(args, "mixing-certify", params)
    if args.action == "bc":
        params = {"radii": _radii_params(args), "horizon": args.horizon, "samples": args.samples}
        return _run_experiment(args, "borel-cantelli", params)
    from .mixing import event_measure, exact_correlation

    system = resolve_system(args.system)
    A, B = _event(args.a), _event(args.b)
    for ev, name in ((A, "--a"), (B, "--b")):
        for w in ev:
            if any(not 0 <= s < system.size for s in w):
                raise ConfigError(name, f"symbol outside alphabet of size {system.size}")
    corr = exact_correlation(system, A, B, args.n)
    out = {
        "correlation": format_rational(corr),
        "mu_A": format_rational(event_measure(system, A)),
        "mu_B": format_rational(event_measure(system, B)),
        "n": args.n,
    }
    print(json.dumps(out, indent=2, sort_keys=True) if args.json else "\n".join(f"{k}: {v}" for k, v in out.items()))
    return EXIT_OK


def cmd_cover(args) -> int:
    radii = _radii_params(args)
    if args.action == "slope":
        return _run_experiment(args, "cover-slope", {"radii": radii, "scales": _scales(args.scales), "trim": args.trim})
    if args.action == "fraction":
        return _run_experiment(args, "cover-fraction", {"radii": radii, "horizon": args.horizon, "samples": args.samples})
    if args.action == "theta":
        return _run_experiment(args, "cover-theta", {"indices": [int(v) for v in args.indices.split(",")]})
    params = {"radii": radii, "s": args.s, "delta": args.contraction, "horizon": args.horizon, "samples": args.samples}
    return _run_experiment(args, "mtp-check", params)


def cmd_spectrum(args) -> int:
    if args.action == "coarse":
        return _run_experiment(args, "spectrum-coarse", {"generation": args.gen, "eps": args.eps})
    if args.action == "levels":
        return _run_experiment(args, "spectrum-levels", {"generation": args.gen, "bins": args.bins})
    from .content import lipschitz_envelope

    xs, gs = [], []
    with open(args.grid, encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                x, g = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if i == 0:
                    continue  # header
                raise ConfigError(f"{args.grid}:{i + 1}", f"expected two numbers, got {row!r}") from None
            xs.append(x)
            gs.append(g)
    ghat = lipschitz_envelope(xs, gs)
    print(table_csv(["x", "g", "ghat"], [[x, g, h] for x, g, h in zip(xs, gs, ghat.tolist())]), end="")
    return EXIT_OK


def cmd_content(args) -> int:
    from .content import essential_content_lower, hausdorff_content_upper

    if args.action == "upper":
        boxes = []
        for part in args.boxes.split(";"):
            vals = _rationals(part, "--boxes")
            boxes.append([(vals[2 * a], vals[2 * a + 1]) for a in range(len(vals) // 2)])
        out = {"upper": hausdorff_content_upper(boxes, args.s, args.depth), "s": args.s}
    else:
        system = resolve_system(args.system)
        b = essential_content_lower(system, float(parse_rational(args.radius, "--radius")), args.s, args.eps)
        out = {"lower": b.value, "s": b.s, "eps": b.eps, "dim_estimate": b.dim_estimate}
    print(json.dumps(out, indent=2, sort_keys=True) if args.json else "\n".join(f"{k}: {v}" for k, v in out.items()))
    return EXIT_OK


def cmd_run(args) -> int:
    code = run(args.config, args.out, args.jobs, args.seed_override, log=_err)
    return code


# -- parser -------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base seed (default 0)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes (default 1)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="write CSV/JSON reports into this directory")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="JSON output")

    parser = argparse.ArgumentParser(prog="ergolab", parents=[common], description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ergolab {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    def leaf(sub, name: str, **kw) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], **kw)

    def with_system(p: argparse.ArgumentParser, default: str = "s3") -> None:
        p.add_argument("--system", default=default, help="config file or builtin (s3, doubling, full-grid)")

    def with_radii(p: argparse.ArgumentParser, delta: str = "2") -> None:
        p.add_argument("--delta", default=delta, help="power-law exponent of r_n = c n^-delta")
        p.add_argument("--radius-scale", default="1", help="the constant c")
        p.add_argument("--radii-file", help="JSON radius spec overriding --delta")

    g = groups.add_parser("system").add_subparsers(dest="action", required=True)
    p = leaf(g, "validate")
    p.add_argument("config")
    p.set_defaults(handler=cmd_system)

    g = groups.add_parser("measure").add_subparsers(dest="action", required=True)
    for name in ("box", "ball", "proj", "dim"):
        p = leaf(g, name)
        with_system(p)
        p.add_argument("--depth", type=int, default=24)
        p.add_argument("--closed", action="store_true", help="treat right endpoints as closed")
        p.set_defaults(handler=cmd_measure)
        if name == "box":
            p.add_argument("--rect", required=True, help="x0,x1[,y0,y1] as rationals")
        elif name == "ball":
            p.add_argument("--center", required=True)
            p.add_argument("--radius", required=True)
        elif name == "proj":
            p.add_argument("--axis", type=int, default=0)
            p.add_argument("--interval", required=True, help="a,b")
        else:
            p.add_argument("--samples", type=int, default=200)
            p.add_argument("--gen", type=int, default=40)

    g = groups.add_parser("hitting").add_subparsers(dest="action", required=True)
    for name in ("profile", "sweep"):
        p = leaf(g, name)
        with_system(p, "doubling")
        p.add_argument("--k-min", type=int, default=16)
        p.add_argument("--k-max", type=int, default=20)
        p.add_argument("--eps", type=float, default=0.1)
        if name == "sweep":
            p.add_argument("--pairs", type=int, default=100)
        else:
            p.add_argument("--pair", type=int, default=0, help="pair index within the seed")
        p.set_defaults(handler=cmd_hitting)

    g = groups.add_parser("mixing").add_subparsers(dest="action", required=True)
    p = leaf(g, "certify")
    with_system(p)
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--gen-a", type=int, default=3)
    p.add_argument("--gen-b", type=int, default=2)
    p.add_argument("--b-events", type=int, default=100)
    p.set_defaults(handler=cmd_mixing)
    p = leaf(g, "correlate")
    with_system(p)
    p.add_argument("--a", required=True, help="event as words 's,s;s' (symbol indices)")
    p.add_argument("--b", required=True)
    p.add_argument("--n", type=int, default=1)
    p.set_defaults(handler=cmd_mixing)
    p = leaf(g, "bc")
    with_system(p, "doubling")
    with_radii(p, "1")
    p.add_argument("--horizon", type=int, default=10**6)
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(handler=cmd_mixing)

    g = groups.add_parser("cover").add_subparsers(dest="action", required=True)
    for name in ("slope", "fraction", "theta", "mtp-check"):
        p = leaf(g, name)
        with_system(p, "doubling")
        with_radii(p, "1" if name == "mtp-check" else "2")
        p.set_defaults(handler=cmd_cover)
        if name == "slope":
            p.add_argument("--scales", default="8..16", help="j0..j1")
            p.add_argument("--trim", type=int, default=0)
        if name in ("fraction", "mtp-check"):
            p.add_argument("--horizon", type=int, default=10**6 if name == "fraction" else 10**5)
            p.add_argument("--samples", type=int, default=200)
        if name == "theta":
            p.add_argument("--indices", default="1024")
        if name == "mtp-check":
            p.add_argument("--s", type=float, default=0.45)
            p.add_argument("--contraction", default="2", help="the exponent delta of the shrunk balls")

    g = groups.add_parser("spectrum").add_subparsers(dest="action", required=True)
    for name in ("coarse", "levels", "envelope"):
        p = leaf(g, name)
        p.set_defaults(handler=cmd_spectrum)
        if name == "envelope":
            p.add_argument("grid", help="CSV file with columns x,g")
            continue
        with_system(p)
        p.add_argument("--gen", type=int, default=10 if name == "coarse" else 12)
        p.add_argument("--eps", type=float, default=0.02)
        p.add_argument("--bins", type=int, default=40)

    g = groups.add_parser("content").add_subparsers(dest="action", required=True)
    p = leaf(g, "upper")
    p.add_argument("--boxes", required=True, help="'x0,x1[,y0,y1];...' closed boxes")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--depth", type=int, default=8)
    p.set_defaults(handler=cmd_content)
    p = leaf(g, "lower")
    with_system(p, "doubling")
    p.add_argument("--radius", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(handler=cmd_content)

    p = groups.add_parser("run", parents=[common])
    p.add_argument("config")
    p.set_defaults(handler=cmd_run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.seed_override = getattr(args, "seed", None)
    for name, default in (("seed", 0), ("jobs", 1), ("out", None), ("json", False)):
        if not hasattr(args, name) or getattr(args, name) is None:
            setattr(args, name, default)
    try:
        return args.handler(args)
    except ConfigError as exc:
        _err(f"invalid input: {exc}")
        return EXIT_INVALID
    except BudgetError as exc:
        _err(f"budget exhausted: {exc}")
        return EXIT_BUDGET
    except (ValueError, IndexError, OSError) as exc:
        _err(str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
