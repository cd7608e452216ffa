"""Acceptance checks, one test per criterion.

Tolerances are pinned here and not derived from the runs they judge.
"""

from __future__ import annotations

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

import test_properties as props
from ergolab.harness import EXIT_OK, execute, parse_config, run
from ergolab.mixing import derived_bound
from ergolab.radii import RadiusSequence, critical_exponent
from ergolab.system import s3_carpet

F = Fraction

S3_DIMENSION = 1.3389  # closed form, rounded
DIM_TOL = 0.05
DIM_RUNTIME_S = 60.0

HIT_MEDIAN = (0.9, 1.1)
HIT_IQR = (0.85, 1.15)

SLOPE_DOUBLING = (0.5, 0.05)
SLOPE_S3 = (1.0, 0.1)

BC_DIVERGENT_MIN = 0.95
BC_CONVERGENT_MAX = 0.05

EXPONENT_TOL = 1e-3


def summary(raw: dict, jobs: int = 1) -> dict:
    return execute(parse_config(raw), jobs).summary


def test_criterion_1_exact_dimension_agreement():
    start = time.perf_counter()
    res = summary({"system": "s3", "experiment": "measure-dimension", "params": {"samples": 200, "generation": 40}})
    elapsed = time.perf_counter() - start
    assert res["closed_form"] == pytest.approx(S3_DIMENSION, abs=5e-5)
    assert abs(res["monte_carlo"] - res["closed_form"]) <= DIM_TOL, res
    assert elapsed < DIM_RUNTIME_S


def test_criterion_2_mixing_certificate():
    bound = derived_bound(s3_carpet())
    assert bound.alpha == pytest.approx(math.log(3 / 2) / math.log(2), rel=1e-12)
    assert (bound.tau, bound.kappa, bound.C) == (F(2, 3), 2, 12)
    res = summary({"system": "s3", "experiment": "mixing-certify", "params": {"k_max": 12, "gen_a": 3, "gen_b": 2, "b_events": 100}})
    # every cell with generation <= 3 on each axis, 100 events, 12 lags
    assert res["checked"] == (1 + 2 + 4 + 8) * (1 + 3 + 9 + 27) * 100 * 12
    assert res["violations"] == [], res["violations"][:3]


@pytest.mark.slow
def test_criterion_3_hitting_time_ratio():
    res = summary({"system": "doubling", "experiment": "hitting-sweep", "params": {"pairs": 100, "k": [16, 20], "eps": 0.1}})
    lo, hi = HIT_MEDIAN
    assert lo <= res["median"] <= hi, res
    lo, hi = HIT_IQR
    assert lo <= res["q25"] and res["q75"] <= hi, res


def test_criterion_4_covering_set_dimension():
    doubling = summary(
        {"system": "doubling", "experiment": "cover-slope", "params": {"radii": {"kind": "power", "delta": "2"}, "scales": [8, 16]}}
    )
    carpet = summary({"system": "s3", "experiment": "cover-slope", "params": {"radii": {"kind": "power", "delta": "1"}, "scales": [6, 12]}})
    want, tol = SLOPE_DOUBLING
    assert abs(doubling["slope"] - want) <= tol, doubling
    want, tol = SLOPE_S3
    assert abs(carpet["slope"] - want) <= tol, carpet


@pytest.mark.slow
def test_criterion_5_borel_cantelli_dichotomy():
    base = {"system": "doubling", "experiment": "cover-fraction", "params": {"horizon": 10**6, "samples": 200}}
    slow = dict(base, params=dict(base["params"], radii={"kind": "power", "delta": "1", "scale": "1/2"}))
    fast = dict(base, params=dict(base["params"], radii={"kind": "power", "delta": "2"}))
    divergent = summary(slow)["fraction"]
    convergent = summary(fast)["fraction"]
    report = f"divergent side {divergent:.3f} (need >= {BC_DIVERGENT_MIN}), convergent side {convergent:.3f} (need <= {BC_CONVERGENT_MAX})"
    assert convergent <= BC_CONVERGENT_MAX, report
    assert divergent >= BC_DIVERGENT_MIN, report


def _analytic_converges(a: float, b: float, s: float) -> bool:
    """sum n^(-a s) (log n)^(b s) < inf  iff  a s > 1, or a s = 1 and b s < -1."""
    return a * s > 1 or (a * s == 1 and b * s < -1)


def test_criterion_6_critical_exponent():
    for delta in ("1", "2", "1/2", "3/7", "5/3"):
        res = critical_exponent(RadiusSequence.power_law(delta))
        assert res.exact == 1 / F(delta)
    rng = np.random.default_rng(20240601)
    for _ in range(10):
        a, b, c = rng.uniform(0.3, 4.0), rng.uniform(-4.0, 4.0), rng.uniform(0.05, 1.0)
        seq = RadiusSequence.generator(lambda L, a=a, b=b, c=c: math.log(c) - a * L + b * math.log(max(L, 1.0)))
        # closed form from the analytic test: the threshold in s is 1/a whatever b is
        closed = 1 / a
        assert not _analytic_converges(a, b, closed - EXPONENT_TOL) and _analytic_converges(a, b, closed + EXPONENT_TOL)
        res = critical_exponent(seq)
        assert res.lower >= closed - EXPONENT_TOL and res.upper <= closed + EXPONENT_TOL, (a, b, res)


@pytest.mark.slow
def test_criterion_7_invariant_suites():
    assert props.check_cylinder_additivity(10**4) == 10**4
    assert props.check_region_monotone(10**3) == 10**3
    assert props.check_chung_erdos(10**3) == 10**3
    assert props.check_envelope(10**3) == 10**3
    assert props.check_approx_square(10**3) == 10**3


DETERMINISM_CONFIGS = [
    {"system": "doubling", "experiment": "hitting-sweep", "params": {"pairs": 12, "k": [10, 12]}, "seed": 7},
    {"system": "s3", "experiment": "mixing-certify", "params": {"k_max": 4, "gen_a": 1, "gen_b": 2, "b_events": 20}, "seed": 3},
    {"system": "doubling", "experiment": "borel-cantelli", "params": {"horizon": 20000, "samples": 16}, "seed": 5},
    {"system": "doubling", "experiment": "cover-fraction", "params": {"horizon": 20000, "samples": 16}, "seed": 2},
    {"system": "s3", "experiment": "cover-slope", "params": {"radii": {"kind": "power", "delta": "1"}, "scales": [4, 8]}, "seed": 1},
    {"system": "s3", "experiment": "spectrum-coarse", "params": {"generation": 8}},
    {"system": "s3", "experiment": "measure-dimension", "params": {"samples": 30, "generation": 20}, "seed": 4},
]


def _outputs(directory) -> dict[str, bytes]:
    # run.log carries wall time and is excluded by design
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.name != "run.log"}


def test_criterion_8_determinism(tmp_path):
    for i, cfg in enumerate(DETERMINISM_CONFIGS):
        path = tmp_path / f"cfg{i}.json"
        path.write_text(json.dumps(cfg))
        outs = []
        for tag, jobs in (("a", 1), ("b", 1), ("c", 8)):
            out = tmp_path / f"out{i}{tag}"
            assert run(path, out, jobs=jobs) == EXIT_OK
            outs.append(_outputs(out))
        assert outs[0] and outs[0] == outs[1] == outs[2], cfg["experiment"]
