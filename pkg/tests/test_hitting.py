import math
from fractions import Fraction

import numpy as np
import pytest

from ergolab.hitting import hitting_ratio_profile, hitting_time, sample_pair, schedule_horizon, sweep_hitting
from ergolab.orbit import ConstantRadius, exact_member
from ergolab.system import BudgetError, embed, point_from_symbols, sample_point, shift

F = Fraction


def test_hitting_time_matches_exact_scan(doubling):
    x = sample_point(doubling, 5000, seed=1)
    y = (F(2, 7),)
    for k in (4, 7, 10):
        r = F(1, 2**k)
        brute = next((n for n in range(4000) if exact_member(x, n, y, ConstantRadius(r))), None)
        assert hitting_time(x, y, r, 4000) == brute


def test_hitting_time_zero_and_torus_wrap(doubling):
    x = point_from_symbols(doubling, [1] * 10 + [0] * 100)
    # x is just below 1, i.e. just left of 0 on the circle
    assert hitting_time(x, (F(0),), F(1, 512), 50) == 0
    with pytest.raises(BudgetError):
        hitting_time(x, (F(0),), F(1, 4), 10**4)
    with pytest.raises(ValueError):
        hitting_time(x, (F(0),), 0, 10)


def test_schedule_horizon():
    assert schedule_horizon(F(1, 1024), 0.0) == 1025
    assert schedule_horizon(F(1, 1024), 0.1) == math.floor(1024**1.1) + 1


def test_profile_records(doubling):
    x, y, mus = sample_pair(doubling, [6, 8], 0.1, seed=0, index=0)
    recs = hitting_ratio_profile(x, y, [6, 8], measures=mus)
    for rec, k in zip(recs, [6, 8]):
        assert rec.mu.contains(F(2, 2**k)) and rec.mu.width <= F(1, 2**20)
        if rec.tau is not None:
            assert rec.tau <= rec.horizon
            assert hitting_time(x, y, rec.radius, rec.horizon) == rec.tau


def test_sweep_rows_and_determinism(doubling):
    a = sweep_hitting(doubling, 6, [8, 9, 10], seed=3)
    b = sweep_hitting(doubling, 6, [8, 9, 10], seed=3, jobs=2)
    assert a.rows == b.rows
    pooled = a.row("all")
    assert pooled["pairs"] == 18 and pooled["found"] <= 18
    assert all(r["max_bracket_width"] < 1e-5 for r in a.rows)
    with pytest.raises(ValueError):
        sweep_hitting(doubling, 0, [8])


def test_censored_quantiles_put_misses_on_top(doubling):
    from ergolab.hitting import HittingRecord, _summary
    from ergolab.measure import MeasureInterval

    mu = MeasureInterval(F(1, 100), F(1, 100), 1)
    recs = [HittingRecord(1, F(1, 2), tau, 10, mu, False) for tau in (10, 100, None, None)]
    row = _summary("x", recs)
    assert row["found"] == 2
    # ratios 0.5, 1.0, inf, inf
    assert row["q25"] == pytest.approx(0.5)
    assert row["median"] == pytest.approx(1.0)
    assert row["q75"] == math.inf


def test_periodic_orbit_never_hits(doubling):
    # x = 2/3 = 0.101010..., orbit {2/3, 1/3}, distance >= 1/3 from 0
    x = point_from_symbols(doubling, [1, 0] * 500)
    assert hitting_time(x, (F(0),), F(1, 4), 990) is None


def test_longer_horizon_keeps_first_hit(doubling):
    x = sample_point(doubling, 5000, seed=8)
    y = (F(5, 11),)
    tau = hitting_time(x, y, F(1, 256), 4000)
    assert tau is not None
    assert hitting_time(x, y, F(1, 256), tau) == tau
    assert hitting_time(x, y, F(1, 256), tau - 1) is None
