import math
from fractions import Fraction

import numpy as np
import pytest

from ergolab.radii import RadiusSequence, critical_exponent, radii_from_config, series_converges
from ergolab.system import ConfigError

F = Fraction


def log_corrected(a: float, b: float, c: float) -> RadiusSequence:
    """r_n = c n^-a (log n)^b (for n >= e); the log factor never moves the critical exponent 1/a."""
    return RadiusSequence.generator(lambda L: math.log(c) - a * L + b * math.log(max(L, 1.0)))


@pytest.mark.parametrize("delta", ["1", "2", "1/2", "7/3", "3"])
def test_power_law_exponent_is_exact(delta):
    res = critical_exponent(RadiusSequence.power_law(delta, "1/2"))
    assert res.exact == 1 / F(delta)
    assert res.lower == res.upper == float(1 / F(delta))


def test_constant_and_geometric():
    assert critical_exponent(RadiusSequence.constant("1/4")).lower == math.inf
    geo = critical_exponent(RadiusSequence.generator(lambda L: -math.exp(L) * math.log(2)))
    assert geo.lower == 0 and geo.upper < 1e-5


def test_explicit_list_spread():
    vals = [F(1, n * n) for n in range(1, 2001)]
    res = critical_exponent(RadiusSequence.explicit(vals))
    assert res.lower == pytest.approx(0.5) and res.upper == pytest.approx(0.5)


def test_log_corrections_bracket_closed_form():
    rng = np.random.default_rng(2024)
    for _ in range(5):
        a, b = rng.uniform(0.5, 3.0), rng.uniform(-3, 3)
        res = critical_exponent(log_corrected(a, b, 1.0))
        assert res.lower - 1e-3 <= 1 / a <= res.upper + 1e-3
        assert res.upper - res.lower <= 1e-3


def test_series_test_matches_analytic_criterion():
    # sum n^-(a s): converges iff a s > 1
    seq = RadiusSequence.power_law("3/2")
    assert series_converges(seq, 0.7)
    assert not series_converges(seq, 0.6)


def test_exact_comparisons():
    r = RadiusSequence.power_law("1/2", "1/2")
    # r_4 = 1/4 exactly even though delta is fractional
    assert r.compare(4, F(1, 4)) == 0
    assert r.compare(4, F(1, 4) + F(1, 10**30)) == 1
    assert r.contains(4, F(1, 4))
    assert r.first_below(F(1, 4)) == 5
    inv = RadiusSequence.power_law(1, "1/2")
    assert inv(10) == F(1, 20)
    assert inv.first_below(F(1, 20)) == 11


def test_scaled_and_floats():
    r = RadiusSequence.power_law(2)
    half = r.scaled("1/2")
    assert half(3) == F(1, 18)
    assert np.allclose(half.floats(np.array([1, 2, 4])), [0.5, 0.125, 1 / 32])
    assert r.check_monotone()


def test_explicit_must_be_nonincreasing():
    with pytest.raises(ValueError):
        RadiusSequence.explicit([F(1, 4), F(1, 2)])


@pytest.mark.parametrize(
    "spec, path",
    [
        ({"kind": "linear"}, "radii.kind"),
        ({"kind": "power", "delta": "2", "offset": 1}, "radii.offset"),
        ({"kind": "power", "delta": 0.5}, "radii.delta"),
        ({"kind": "explicit", "values": "1/2"}, "radii.values"),
        ({"kind": "constant", "value": "-1"}, "radii"),
    ],
)
def test_config_errors(spec, path):
    with pytest.raises(ConfigError) as info:
        radii_from_config(spec)
    assert info.value.path == path


def test_config_roundtrip():
    r = radii_from_config({"kind": "power", "delta": "1", "scale": "1/2"})
    assert r(1) == F(1, 2) and r.describe()["delta"] == "1/1"
