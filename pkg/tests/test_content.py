import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import approx_square_classes, envelope_oracle
from ergolab.content import (
    cell_mass_classes,
    coarse_spectrum,
    essential_content_lower,
    hausdorff_content_upper,
    level_set_histogram,
    lipschitz_envelope,
    mass_near,
)
from ergolab.measure import dimension_closed_form
from ergolab.system import make_system

F = Fraction


def test_content_of_simple_sets():
    assert hausdorff_content_upper([[(0, 1)]], 1.0) == pytest.approx(1.0)
    assert hausdorff_content_upper([[(0, 1), (0, 1)]], 2.0) == pytest.approx(1.0)
    # two far-apart tiny intervals: covering each separately beats the hull for s < 1
    two = [[(0, F(1, 64))], [(F(63, 64), 1)]]
    # closed ends touch the neighbouring 1/64 cubes, so the best dyadic cover uses two 1/32 cubes
    assert hausdorff_content_upper(two, 0.5, depth=8) == pytest.approx(2 * (1 / 32) ** 0.5)
    assert hausdorff_content_upper(two, 1.0) <= 1.0
    assert hausdorff_content_upper([], 1.0) == 0.0
    with pytest.raises(ValueError):
        hausdorff_content_upper([[(0, 1)]], -1)


def test_content_upper_never_beats_a_point_set_lower_bound():
    # H^s_inf of [0,1] is 1 for s <= 1 in the sup-norm diameter convention
    for s in (0.3, 0.7, 1.0):
        assert hausdorff_content_upper([[(0, 1)]], s) >= 1.0 - 1e-12


def test_essential_content_lower(doubling, s3):
    b = essential_content_lower(doubling, 2**-10, 0.5, 0.01)
    assert b.value == pytest.approx(0.25 * 2 ** (-10 * 0.5 * 1.01 / 0.99))
    assert b.value == pytest.approx(7.284e-3, rel=1e-3)
    with pytest.raises(ValueError):
        essential_content_lower(s3, 0.1, 1.5, 0.01)
    with pytest.raises(ValueError):
        essential_content_lower(s3, 0.1, 0.5, 0.0)


def multinomial_classes(system, k):
    """S3-type closed form: uniform first l symbols, then the x marginal q."""
    l = system.approx_split(k)
    q = [w for w in system.marginals[0] if w > 0]
    out = {}
    n_words = sum(1 for p in system.probs if p > 0)
    p0 = system.probs[0]
    for a in range(k - l + 1):
        mass = p0**l * q[0] ** a * q[1] ** (k - l - a)
        out[mass] = out.get(mass, 0) + n_words**l * math.comb(k - l, a)
    return out


@pytest.mark.parametrize("k", [1, 3, 5, 7])
def test_mass_classes_multinomial(s3, k):
    assert cell_mass_classes(s3, k) == multinomial_classes(s3, k)


@pytest.mark.parametrize("fixture", ["s3", "skewed", "grid23", "doubling"])
def test_mass_classes_match_enumeration(fixture, request):
    system = request.getfixturevalue(fixture)
    for k in range(1, 6):
        assert cell_mass_classes(system, k) == approx_square_classes(system, k)


def test_mass_classes_sum_to_one(skewed):
    classes = cell_mass_classes(skewed, 12)
    assert sum(m * c for m, c in classes.items()) == 1


def test_lebesgue_spectrum_is_a_point(grid23):
    tab = coarse_spectrum(grid23, 8, 0.01, [1.5, 2.0, 2.5])
    assert tab.counts[0] == 0 and tab.counts[2] == 0
    assert tab.counts[1] == tab.total_cells
    assert tab.exponents[1] == pytest.approx(2.0)


def test_s3_spectrum_peak_near_dimension(s3):
    hs = np.round(np.arange(0.9, 2.0, 0.01), 2)
    tab = coarse_spectrum(s3, 12, 0.02, hs)
    assert max(tab.exponents) <= math.log(tab.total_cells) / -tab.log_side + 1e-12
    hist = level_set_histogram(s3, 12, 40)
    assert hist.mass.sum() == pytest.approx(1.0)
    assert abs(hist.mass_mode() - dimension_closed_form(s3)) < 0.1
    assert mass_near(s3, 12, dimension_closed_form(s3), 0.2) > 0.5
    with pytest.raises(ValueError):
        coarse_spectrum(s3, 0, 0.1, [1.0])


def test_envelope_examples():
    xs = [0.0, 1.0, 2.0, 3.0]
    assert lipschitz_envelope(xs, [0, 5, 0, 0]).tolist() == [4, 5, 4, 3]
    assert lipschitz_envelope([0.0], [2.0]).tolist() == [2.0]
    with pytest.raises(ValueError):
        lipschitz_envelope([1.0, 0.0], [0.0, 0.0])


def test_envelope_matches_quadratic_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 60))
        xs = np.sort(rng.uniform(-3, 3, n))
        g = rng.normal(size=n)
        assert np.allclose(lipschitz_envelope(xs, g), envelope_oracle(xs, g))
