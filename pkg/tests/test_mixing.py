import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import correlation_oracle
from ergolab.measure import CellBox, ball_measure
from ergolab.mixing import (
    adic_cells,
    as_cells,
    borel_cantelli_experiment,
    chung_erdos_lower,
    cylinder_unions,
    derived_bound,
    event_measure,
    exact_correlation,
    mixing_certificate,
    partial_sums,
    projection_decay_constants,
)
from ergolab.radii import RadiusSequence

F = Fraction


def random_cell(system, rng, max_gen=3):
    gens = tuple(int(rng.integers(0, max_gen + 1)) for _ in system.bases)
    return CellBox(gens, tuple(int(rng.integers(0, b**g)) for g, b in zip(gens, system.bases)))


def test_correlation_examples(s3):
    assert exact_correlation(s3, [[0]], [[2]], 1) == F(1, 9)
    assert exact_correlation(s3, [[0]], [[0]], 0) == F(1, 3)
    assert exact_correlation(s3, [[0]], [[1]], 0) == 0


@pytest.mark.parametrize("fixture", ["s3", "skewed", "grid23"])
def test_correlation_matches_word_enumeration(fixture, request):
    system = request.getfixturevalue(fixture)
    rng = np.random.default_rng(3)
    for _ in range(30):
        A = [random_cell(system, rng, 2) for _ in range(int(rng.integers(1, 3)))]
        B = [random_cell(system, rng, 2) for _ in range(int(rng.integers(1, 3)))]
        n = int(rng.integers(0, 4))
        if max(max(c.gens) for c in A + B) == 0:
            continue
        assert exact_correlation(system, A, B, n) == correlation_oracle(system, A, B, n)


def test_overlapping_event_is_not_double_counted(s3):
    ev = [CellBox((1, 1), (1, 1)), CellBox((2, 1), (2, 1))]
    assert event_measure(s3, ev) == F(1, 3)
    assert len(as_cells(s3, ev)) == 2


def test_far_apart_events_decorrelate(s3):
    A, B = [[1, 2]], [[2, 0, 1]]
    assert exact_correlation(s3, A, B, 2) == event_measure(s3, A) * event_measure(s3, B)


def test_derived_constants(s3, skewed):
    bound = derived_bound(s3)
    assert bound.alpha == pytest.approx(math.log(3 / 2) / math.log(2))
    assert bound.tau == F(2, 3) and bound.C == 12 and bound.kappa == 2
    assert projection_decay_constants(s3).measured_adic_kappa == 1
    # y marginal (1/2, 1/3, 1/6) in base 3 decays slowest
    other = derived_bound(skewed)
    assert other.alpha == pytest.approx(math.log(2) / math.log(3))
    assert other.tau >= 2**-other.alpha


def test_small_certificate_and_violation_detection(s3):
    a_family = adic_cells(s3, 1)
    b_family = cylinder_unions(s3, 1, 3, seed=0)
    rep = mixing_certificate(s3, range(1, 5), a_family, b_family)
    assert rep.checked == len(a_family) * 3 * 4 and not rep.violations
    # an absurdly small decay constant must be caught
    from ergolab.mixing import MixingBound

    tight = MixingBound(F(1), F(1, 10**6), F(1, 2), 1.0, F(1))
    bad = mixing_certificate(s3, [0, 1], a_family, b_family, bound=tight)
    assert bad.violations


def test_cylinder_unions_are_seeded(s3):
    assert cylinder_unions(s3, 2, 30, seed=1) == cylinder_unions(s3, 2, 30, seed=1)
    assert len(cylinder_unions(s3, 2, 100, seed=0)) == 100


def test_chung_erdos():
    # two events of measure 1/2 meeting in 1/6
    pair = [[F(1, 2), F(1, 6)], [F(1, 6), F(1, 2)]]
    assert chung_erdos_lower(pair) == F(3, 4)
    assert chung_erdos_lower([[F(1, 3), F(0)], [F(0), F(1, 3)]]) == F(2, 3)
    with pytest.raises(ValueError):
        chung_erdos_lower([[F(1, 2), F(1, 3)], [F(1, 6), F(1, 2)]])


def test_partial_sums_bracket_harmonic(doubling):
    radii = RadiusSequence.power_law(1, "1/2")
    sums = partial_sums(doubling, (F(1, 3),), radii, 10**4, [10, 100, 10**4])
    for N, (lo, hi) in sums.items():
        # mu(B(y, 1/(2n))) = 1/n on the circle
        h = sum(1.0 / n for n in range(1, N + 1))
        assert float(lo) - 1e-9 <= h <= float(hi) + 1e-9
        assert float(hi - lo) <= 0.2 * h


def test_borel_cantelli_small(doubling):
    rep = borel_cantelli_experiment(doubling, (F(1, 3),), RadiusSequence.power_law(1, "1/2"), 20000, 10, seed=0)
    assert len(rep.hits) == 10 and rep.tail_window == (2000, 20000)
    fast = borel_cantelli_experiment(doubling, (F(1, 3),), RadiusSequence.power_law(2), 20000, 10, seed=0)
    assert fast.tail_fraction <= rep.tail_fraction
    again = borel_cantelli_experiment(doubling, (F(1, 3),), RadiusSequence.power_law(1, "1/2"), 20000, 10, seed=0, jobs=2)
    assert again == rep
