from fractions import Fraction

import numpy as np
import pytest

from ergolab.measure import CellBox
from ergolab.orbit import ConstantRadius, coord_bounds, exact_member, first_hit, torus_distance
from ergolab.system import (
    BudgetError,
    ConfigError,
    embed,
    format_rational,
    induced_orbit,
    make_system,
    parse_rational,
    point_from_digits,
    point_from_symbols,
    sample_point,
    shift,
)


def test_parse_rational_forms():
    assert parse_rational("1/3") == Fraction(1, 3)
    assert parse_rational(2) == 2
    assert parse_rational("0.25") == Fraction(1, 4)
    with pytest.raises(ConfigError):
        parse_rational(0.1)
    with pytest.raises(ConfigError):
        parse_rational("1/0")
    assert format_rational(Fraction(2, 6)) == "1/3"


@pytest.mark.parametrize(
    "cfg, path",
    [
        ({"dim": 3, "bases": [2], "alphabet": [0], "probs": ["1"]}, "system.dim"),
        ({"dim": 1, "bases": [1], "alphabet": [0], "probs": ["1"]}, "system.bases[0]"),
        ({"dim": 2, "bases": [3, 2], "alphabet": [[0, 0]], "probs": ["1"]}, "system.bases"),
        ({"dim": 1, "bases": [2], "alphabet": [0, 2], "probs": ["1/2", "1/2"]}, "system.alphabet[1]"),
        ({"dim": 1, "bases": [2], "alphabet": [0, 0], "probs": ["1/2", "1/2"]}, "system.alphabet[1]"),
        ({"dim": 1, "bases": [2], "alphabet": [0, 1], "probs": ["1/2", "1/3"]}, "system.probs"),
        ({"dim": 1, "bases": [2], "alphabet": [0, 1], "probs": ["3/2", "-1/2"]}, "system.probs[0]"),
        ({"dim": 1, "bases": [2], "alphabet": [0, 1], "probs": ["1/2", "1/2"], "colour": 1}, "system.colour"),
        ({"dim": 1, "bases": [2], "alphabet": [0, 1]}, "system.probs"),
    ],
)
def test_invalid_systems_name_the_key(cfg, path):
    with pytest.raises(ConfigError) as info:
        make_system(cfg)
    assert info.value.path == path


def test_marginals_and_split(s3, skewed):
    assert s3.marginals[0] == (Fraction(1, 3), Fraction(2, 3))
    assert s3.marginals[1] == (Fraction(1, 3),) * 3
    assert skewed.marginals[0] == (Fraction(1, 2), Fraction(1, 2))
    for k in range(200):
        l = s3.approx_split(k)
        assert 3**l <= 2**k < 3 ** (l + 1)


def test_shift_is_offset_and_embed_exact(s3):
    p = point_from_digits(s3, [(1, 2), (0, 0), (1, 1)])
    (x, y), (ex, ey) = embed(p)
    assert x == Fraction(1, 2) + Fraction(1, 8)
    assert y == Fraction(2, 3) + Fraction(1, 27)
    assert (ex, ey) == (Fraction(1, 8), Fraction(1, 27))
    q = shift(p, 1)
    assert embed(q)[0] == (Fraction(1, 4), Fraction(1, 9))
    with pytest.raises(BudgetError):
        shift(p, 4)
    with pytest.raises(IndexError):
        point_from_symbols(s3, [3])


def test_sampling_is_seeded(s3):
    a = sample_point(s3, 1000, seed=5, index=2)
    b = sample_point(s3, 1000, seed=5, index=2)
    c = sample_point(s3, 1000, seed=5, index=3)
    assert np.array_equal(a.symbols(), b.symbols())
    assert not np.array_equal(a.symbols(), c.symbols())


def test_sampling_frequencies(skewed):
    syms = sample_point(skewed, 60000, seed=1).symbols()
    freq = np.bincount(syms, minlength=3) / syms.size
    assert np.allclose(freq, [1 / 2, 1 / 3, 1 / 6], atol=0.01)


def test_embed_long_prefix_matches_horner(doubling):
    p = sample_point(doubling, 3000, seed=0)
    num = 0
    for d in p.axis_digits(0).tolist():
        num = 2 * num + d
    assert embed(p)[0][0] == Fraction(num, 2**3000)


def test_torus_distance():
    assert torus_distance(Fraction(1, 10), Fraction(9, 10)) == Fraction(1, 5)
    assert torus_distance(Fraction(1, 2), Fraction(1, 2)) == 0


def test_coord_bounds_bracket_orbit(doubling):
    p = sample_point(doubling, 500, seed=3)
    for n in (0, 7, 100):
        lo, width = coord_bounds(p, n, 0, 64)
        true = embed(shift(p, n))[0][0]
        assert lo <= true <= lo + width


def test_first_hit_matches_exact_scan(doubling):
    p = sample_point(doubling, 4000, seed=9)
    center = (Fraction(1, 3),)
    r = ConstantRadius(Fraction(1, 512))
    hit = first_hit(p, center, r, 0, 3000)
    brute = next((n for n in range(3000) if exact_member(p, n, center, r)), None)
    assert hit == brute


def test_induced_orbit_hits_cells(s3):
    p = sample_point(s3, 5000, seed=2)
    cells = [CellBox((1, 1), (0, 0))]
    orbit = induced_orbit(p, cells, 50, 4000)
    syms = p.symbols()
    brute = [n for n in range(1, 4001) if syms[n] == 0][:50]
    assert list(orbit.hits) == brute
    assert sum(orbit.return_times()) == orbit.hits[-1]
    sparse = induced_orbit(p, [CellBox((3, 3), (0, 0))], 10**6, 100)
    assert sparse.truncated
