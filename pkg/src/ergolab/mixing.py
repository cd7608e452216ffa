"""Exact correlations, the phi-mixing certificate, and Borel-Cantelli experiments.

Events are finite unions of adic cells.  Because mu is a Bernoulli measure on
symbols, mu(A cap T^-n B) is a product over symbol positions of the weight of
symbols matching the digit constraints that A imposes at position t and B at
position t - n, so correlations are computed exactly with no tree search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from itertools import product
from typing import Sequence, Union

import numpy as np

from .measure import CellBox, ball_measure, cell_constraints, cell_measure, cells_intersect, position_weight
from .orbit import ball_mask
from .parallel import pmap
from .radii import RadiusSequence
from .system import ExpandingToralSystem, SymbolicPoint, Word, embed, rng_for, sample_point

Event = Sequence[Union[CellBox, Word, Sequence[int]]]


def as_cells(system: ExpandingToralSystem, event: Event) -> list[CellBox]:
    """Normalize an event to pairwise disjoint cells (words become their cylinder cells)."""
    cells = []
    for e in event:
        c = e if isinstance(e, CellBox) else CellBox.of_word(system, e)
        c.check(system)
        cells.append(c)
    # drop cells contained in an earlier one, refine partial overlaps to a common grid
    if all(not cells_intersect(a, b, system) for i, a in enumerate(cells) for b in cells[i + 1 :]):
        return cells
    gens = tuple(max(c.gens[a] for c in cells) for a in range(system.dim))
    fine: set[tuple[int, ...]] = set()
    for c in cells:
        ranges = []
        for a, b in enumerate(system.bases):
            extra = gens[a] - c.gens[a]
            lo = c.indices[a] * b**extra
            ranges.append(range(lo, lo + b**extra))
        fine.update(product(*ranges))
    return [CellBox(gens, idx) for idx in sorted(fine)]


def event_measure(system: ExpandingToralSystem, event: Event) -> Fraction:
    return sum((cell_measure(system, c) for c in as_cells(system, event)), Fraction(0))


def _joint(system: ExpandingToralSystem, a: CellBox, b: CellBox, n: int) -> Fraction:
    ca = cell_constraints(system, a)
    if len(ca) <= n:
        return cell_measure(system, a) * cell_measure(system, b)
    cb = cell_constraints(system, b, shift_by=n)
    out = Fraction(1)
    for t in range(max(len(ca), len(cb))):
        fixed = [None] * system.dim
        for cons in (ca, cb):
            if t < len(cons):
                for axis, d in cons[t].items():
                    if fixed[axis] is not None and fixed[axis] != d:
                        return Fraction(0)
                    fixed[axis] = d
        if any(f is not None for f in fixed):
            out *= position_weight(system, tuple(fixed))
            if out == 0:
                return out
    return out


def exact_correlation(system: ExpandingToralSystem, A: Event, B: Event, n: int) -> Fraction:
    """mu(A cap T^-n B) exactly."""
    if n < 0:
        raise ValueError("n must be >= 0")
    total = Fraction(0)
    for a in as_cells(system, A):
        for b in as_cells(system, B):
            total += _joint(system, a, b, n)
    return total


# -- constants -----------------------------------------------------------------------


@dataclass(frozen=True)
class MixingBound:
    """phi(n) = C tau^n in mu(A cap T^-n B) <= gamma mu(A) mu(B) + phi(n) mu(B)."""

    gamma: Fraction
    C: Fraction
    tau: Fraction
    alpha: float
    kappa: Fraction

    def __post_init__(self) -> None:
        if self.gamma < 1 or self.C <= 0 or not 0 < self.tau < 1 or self.alpha <= 0 or self.kappa < 1:
            raise ValueError("mixing constants out of range")

    def phi(self, n: int) -> Fraction:
        return self.C * self.tau**n

    def as_dict(self) -> dict:
        return {"gamma": float(self.gamma), "alpha": self.alpha, "kappa": float(self.kappa), "C": float(self.C), "tau": float(self.tau)}


def _round_up(v: float, bits: int = 40) -> Fraction:
    """A rational >= v with denominator 2^bits."""
    return Fraction(math.ceil(v * 2**bits), 2**bits)


@dataclass(frozen=True)
class DecayConstants:
    alpha: float
    kappa: Fraction
    measured_adic_kappa: Fraction
    verified_generations: int
    extremal: tuple[int, Fraction]  # (axis, weight) attaining alpha


def projection_decay_constants(system: ExpandingToralSystem, kappa: Fraction = Fraction(2), generations: int = 20) -> DecayConstants:
    """alpha = min over axes and used digits of log(1/q)/log(base), with kappa checked on adic intervals.

    The adic check is exhaustive: the largest marginal mass of a generation-g
    interval on an axis is the g-th power of the largest digit weight there, so
    the worst ratio mu(I) / |I|^alpha is found for every g <= ``generations``.
    """
    best = (math.inf, 0, Fraction(1))
    for axis, (base, q) in enumerate(zip(system.bases, system.marginals)):
        for w in q:
            if 0 < w < 1:
                a = math.log(1 / w) / math.log(base)
                if a < best[0]:
                    best = (a, axis, w)
    alpha = best[0]
    if alpha == math.inf:
        raise ValueError("every marginal is a point mass; no positive decay exponent")
    measured = Fraction(0)
    for axis, (base, q) in enumerate(zip(system.bases, system.marginals)):
        qmax = max(q)
        for g in range(generations + 1):
            # mu(I) / |I|^alpha for the heaviest generation-g interval
            ratio = float(qmax) ** g * float(base) ** (alpha * g)
            measured = max(measured, _round_up(ratio))
    if measured > kappa:
        raise ValueError(f"kappa {kappa} below the measured adic constant {float(measured)}")
    return DecayConstants(alpha, Fraction(kappa), measured, generations, (best[1], best[2]))


def derived_bound(system: ExpandingToralSystem, kappa: Fraction = Fraction(2), gamma: Fraction = Fraction(1)) -> MixingBound:
    """C = 4 kappa 2^alpha and tau = m^-alpha, exact when alpha comes from the base-m axis."""
    dc = projection_decay_constants(system, kappa)
    axis, w = dc.extremal
    m = system.m
    if axis == 0:
        tau = w  # m^-alpha = w
        two_alpha = Fraction(1) / w if m == 2 else _round_up(2**dc.alpha)
    else:
        tau = _round_up(float(m) ** -dc.alpha)
        two_alpha = _round_up(2**dc.alpha)
    return MixingBound(gamma, 4 * dc.kappa * two_alpha, tau, dc.alpha, dc.kappa)


# -- certificate -----------------------------------------------------------------------


def adic_cells(system: ExpandingToralSystem, max_gen: int) -> list[CellBox]:
    """Every cell with generation <= max_gen on each axis."""
    per_axis = [[(g, k) for g in range(max_gen + 1) for k in range(b**g)] for b in system.bases]
    return [CellBox(tuple(g for g, _ in combo), tuple(k for _, k in combo)) for combo in product(*per_axis)]


def cylinder_unions(system: ExpandingToralSystem, max_gen: int, count: int, seed: int) -> list[list[CellBox]]:
    """All single cylinders of generation <= max_gen, then seeded random unions up to ``count`` events."""
    words = [w for g in range(1, max_gen + 1) for w in product(range(system.size), repeat=g)]
    events = [[CellBox.of_word(system, w)] for w in words][:count]
    rng = rng_for(seed, 0)
    top = [w for w in words if len(w) == max_gen]
    while len(events) < count:
        size = int(rng.integers(2, max(3, len(top) // 2 + 1)))
        pick = rng.choice(len(top), size=min(size, len(top)), replace=False)
        events.append([CellBox.of_word(system, top[i]) for i in sorted(pick)])
    return events


@dataclass
class CertificateReport:
    bound: MixingBound
    checked: int = 0
    violations: list = field(default_factory=list)
    min_slack: Fraction | None = None
    max_slack: Fraction | None = None

    def as_dict(self) -> dict:
        return {
            "checked": self.checked,
            "violations": self.violations,
            "min_slack": float(self.min_slack) if self.min_slack is not None else None,
            "max_slack": float(self.max_slack) if self.max_slack is not None else None,
            "constants": self.bound.as_dict(),
        }


def _certify_a(a: CellBox, system: ExpandingToralSystem, b_events, b_measures, ks, bound: MixingBound):
    mu_a = cell_measure(system, a)
    depth_a = max(a.gens, default=0)
    phis = {k: bound.phi(k) for k in ks}
    out = []
    for bi, (bev, mu_b) in enumerate(zip(b_events, b_measures)):
        for k in ks:
            if k >= depth_a:
                # A depends on symbols before k only, T^-k B on symbols from k on
                lhs = mu_a * mu_b
            else:
                lhs = sum((_joint(system, a, b, k) for b in bev), Fraction(0))
            out.append((bi, k, lhs, bound.gamma * mu_a * mu_b + phis[k] * mu_b))
    return out


def mixing_certificate(
    system: ExpandingToralSystem,
    ks: Sequence[int],
    a_family: Sequence[CellBox] | None = None,
    b_family: Sequence[Sequence[CellBox]] | None = None,
    bound: MixingBound | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> CertificateReport:
    """Check mu(A cap T^-k B) <= gamma mu(A) mu(B) + C tau^k mu(B) exactly on every (A, B, k)."""
    if bound is None:
        bound = derived_bound(system)
    if a_family is None:
        a_family = adic_cells(system, 3)
    if b_family is None:
        b_family = cylinder_unions(system, 2, 100, seed)
    b_events = [as_cells(system, b) for b in b_family]
    b_measures = [sum((cell_measure(system, c) for c in b), Fraction(0)) for b in b_events]
    task = partial(_certify_a, system=system, b_events=b_events, b_measures=b_measures, ks=tuple(ks), bound=bound)
    report = CertificateReport(bound)
    for a, results in zip(a_family, pmap(task, list(a_family), jobs)):
        for bi, k, lhs, rhs in results:
            report.checked += 1
            slack = rhs - lhs
            if report.min_slack is None or slack < report.min_slack:
                report.min_slack = slack
            if report.max_slack is None or slack > report.max_slack:
                report.max_slack = slack
            if slack < 0:
                report.violations.append(
                    {"A": {"gens": list(a.gens), "indices": list(a.indices)}, "B": bi, "k": k, "lhs": str(lhs), "rhs": str(rhs)}
                )
    return report


# -- Chung-Erdos and Borel-Cantelli --------------------------------------------------------


def chung_erdos_lower(pairwise) -> Fraction | float:
    """(sum_i mu(A_i))^2 / sum_{i,j} mu(A_i cap A_j), a lower bound on mu(union A_i)."""
    rows = [list(r) for r in pairwise]
    size = len(rows)
    if any(len(r) != size for r in rows):
        raise ValueError("pairwise matrix must be square")
    for i in range(size):
        for j in range(size):
            if rows[i][j] < 0:
                raise ValueError("pairwise measures must be nonnegative")
            if rows[i][j] != rows[j][i]:
                raise ValueError("pairwise matrix must be symmetric")
    total = sum(rows[i][i] for i in range(size))
    denom = sum(sum(r) for r in rows)
    if denom == 0:
        return Fraction(0) if all(isinstance(v, (int, Fraction)) for r in rows for v in r) else 0.0
    return total * total / denom


def _checkpoint_grid(horizon: int, ratio: float = 1.02) -> list[int]:
    pts = list(range(1, min(horizon, 64) + 1))
    v = float(pts[-1])
    while pts[-1] < horizon:
        v *= ratio
        nxt = min(horizon, max(pts[-1] + 1, int(v)))
        pts.append(nxt)
    return pts


def partial_sums(system: ExpandingToralSystem, y, radii: RadiusSequence, horizon: int, checkpoints: Sequence[int], depth: int = 28):
    """Certified brackets on sum_{n <= N} mu(B(y, r_n)) at each checkpoint N.

    Over a block [a, b) of a log-spaced grid the radii are nonincreasing, so
    the block sum lies between (b - a) mu(B(y, r_{b-1})) and (b - a) mu(B(y, r_a)).
    """
    grid = sorted(set(_checkpoint_grid(horizon)) | {c + 1 for c in checkpoints if c <= horizon} | {horizon + 1})
    cache: dict[int, tuple[Fraction, Fraction]] = {}

    def mu(n: int) -> tuple[Fraction, Fraction]:
        if n not in cache:
            r = radii(n)
            r = Fraction(r) if not isinstance(r, float) else Fraction(r).limit_denominator(2**62)
            b = ball_measure(system, y, r, depth)
            cache[n] = (b.lower, b.upper)
        return cache[n]

    lo_acc = hi_acc = Fraction(0)
    out = {}
    want = set(checkpoints)
    for a, b in zip(grid, grid[1:]):
        lo_acc += (b - a) * mu(b - 1)[0]
        hi_acc += (b - a) * mu(a)[1]
        if b - 1 in want:
            out[b - 1] = (float(lo_acc), float(hi_acc))
    return out


def _bc_sample(index: int, system, center, radii, horizon, seed, tail_start) -> tuple[int, int]:
    x = sample_point(system, horizon + 80, seed, index)
    hits = tail = 0
    start, chunk = 1, 1 << 18
    while start <= horizon:
        count = min(chunk, horizon - start + 1)
        mask = ball_mask(x, center, radii, start, count)
        idx = np.flatnonzero(mask) + start
        hits += idx.size
        tail += int(np.count_nonzero(idx >= tail_start))
        start += count
    return hits, tail


@dataclass(frozen=True)
class BorelCantelliReport:
    partial_sums: dict
    hits: list[int]
    tail_hits: list[int]
    tail_window: tuple[int, int]

    @property
    def tail_fraction(self) -> float:
        return sum(t > 0 for t in self.tail_hits) / len(self.tail_hits)


def borel_cantelli_experiment(
    system: ExpandingToralSystem,
    y,
    radii: RadiusSequence,
    horizon: int,
    num_samples: int,
    seed: int = 0,
    jobs: int = 1,
    tail_start: int | None = None,
) -> BorelCantelliReport:
    """Hits of T^n x in B(y, r_n), n = 1..horizon, for mu-sampled x, plus the partial sums of mu(B(y, r_n))."""
    if not radii.check_monotone(min(horizon, 100_000)):
        raise ValueError("radii must be nonincreasing")
    center = embed(y)[0] if isinstance(y, SymbolicPoint) else tuple(Fraction(c) for c in y)
    if tail_start is None:
        tail_start = max(1, horizon // 10)
    checkpoints = sorted({10**e for e in range(1, 20) if 10**e <= horizon} | {horizon})
    sums = partial_sums(system, center, radii, horizon, checkpoints)
    task = partial(_bc_sample, system=system, center=center, radii=radii, horizon=horizon, seed=seed, tail_start=tail_start)
    res = pmap(task, range(num_samples), jobs)
    return BorelCantelliReport(sums, [h for h, _ in res], [t for _, t in res], (tail_start, horizon))
