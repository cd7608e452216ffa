"""Exact and bracketed queries against the self-affine measure mu.

All measures are :class:`fractions.Fraction`.  Adic cells and cylinders have
exact product measures.  Boxes with arbitrary rational corners are handled by
a digit automaton that walks the cylinder tree level by level, grouping
cylinders by their position relative to the box corners; at generation ``D``
its lower bound is the mass of generation-``D`` cylinders inside the box and
its upper bound the mass of those meeting it.

Conventions: cells are half-open ``[k b^-g, (k+1) b^-g)`` (a point belongs to
the cell whose digits it starts with) and boxes are half-open on the right
unless ``closed=True``.  Balls are closed sup-norm balls on the torus; their
boundary is null unless a marginal is a point mass, in which case the closed
box is used.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .system import (
    BudgetError,
    ExpandingToralSystem,
    SymbolicPoint,
    Word,
    embed,
    rng_for,
    draw_symbols,
)

Box = Sequence[tuple[Fraction, Fraction]]

DEFAULT_DEPTH = 24
CENTER_DIGITS = 512


@dataclass(frozen=True)
class CellBox:
    """Product of per-axis adic intervals ``[k b^-g, (k+1) b^-g)``."""

    gens: tuple[int, ...]
    indices: tuple[int, ...]

    def check(self, system: ExpandingToralSystem) -> None:
        if len(self.gens) != system.dim or len(self.indices) != system.dim:
            raise ValueError("cell dimension does not match the system")
        for g, k, b in zip(self.gens, self.indices, system.bases):
            if g < 0 or not 0 <= k < b**g:
                raise ValueError(f"cell index {k} outside [0, {b}^{g})")

    def bounds(self, system: ExpandingToralSystem) -> tuple[tuple[Fraction, Fraction], ...]:
        return tuple(
            (Fraction(k, b**g), Fraction(k + 1, b**g)) for g, k, b in zip(self.gens, self.indices, system.bases)
        )

    def digits(self, system: ExpandingToralSystem, axis: int) -> list[int]:
        g, k, b = self.gens[axis], self.indices[axis], system.bases[axis]
        out = []
        for _ in range(g):
            k, d = divmod(k, b)
            out.append(d)
        return out[::-1]

    @classmethod
    def of_word(cls, system: ExpandingToralSystem, word: Word | Sequence[int]) -> "CellBox":
        syms = word.symbols if isinstance(word, Word) else tuple(word)
        idx = []
        for axis, b in enumerate(system.bases):
            k = 0
            for s in syms:
                k = k * b + system.alphabet[s][axis]
            idx.append(k)
        return cls(tuple(len(syms) for _ in system.bases), tuple(idx))

    @classmethod
    def whole(cls, system: ExpandingToralSystem) -> "CellBox":
        return cls((0,) * system.dim, (0,) * system.dim)


def cells_intersect(a: CellBox, b: CellBox, system: ExpandingToralSystem) -> bool:
    for axis, base in enumerate(system.bases):
        ga, gb = a.gens[axis], b.gens[axis]
        ka, kb = a.indices[axis], b.indices[axis]
        if ga >= gb:
            if ka // base ** (ga - gb) != kb:
                return False
        elif kb // base ** (gb - ga) != ka:
            return False
    return True


@dataclass(frozen=True)
class MeasureInterval:
    lower: Fraction
    upper: Fraction
    depth: int

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    def mid(self) -> float:
        return float(self.lower + self.upper) / 2

    def contains(self, value: float | Fraction) -> bool:
        return self.lower <= value <= self.upper

    def __add__(self, other: "MeasureInterval") -> "MeasureInterval":
        return MeasureInterval(self.lower + other.lower, self.upper + other.upper, min(self.depth, other.depth))

    def scale(self, factor: Fraction) -> "MeasureInterval":
        return MeasureInterval(self.lower * factor, self.upper * factor, self.depth)


# -- exact cell measures -----------------------------------------------------


def cylinder_measure(system: ExpandingToralSystem, word: Word | Sequence[int]) -> Fraction:
    syms = word.symbols if isinstance(word, Word) else tuple(word)
    out = Fraction(1)
    for s in syms:
        if not 0 <= s < system.size:
            raise IndexError(f"symbol index {s} outside alphabet of size {system.size}")
        out *= system.probs[s]
    return out


def position_weight(system: ExpandingToralSystem, fixed: tuple[int | None, ...]) -> Fraction:
    """Probability that one symbol matches the per-axis digit constraints (``None`` = free)."""
    return _position_weight(system, fixed)


@lru_cache(maxsize=65536)
def _position_weight(system: ExpandingToralSystem, fixed: tuple[int | None, ...]) -> Fraction:
    total = Fraction(0)
    for sym, p in zip(system.alphabet, system.probs):
        if all(f is None or f == d for f, d in zip(fixed, sym)):
            total += p
    return total


def constraint_measure(system: ExpandingToralSystem, constraints: Sequence[dict[int, int]]) -> Fraction:
    """mu of the set of points whose t-th symbol matches ``constraints[t]`` (axis -> digit)."""
    out = Fraction(1)
    for c in constraints:
        if c:
            out *= position_weight(system, tuple(c.get(a) for a in range(system.dim)))
            if out == 0:
                break
    return out


def cell_constraints(system: ExpandingToralSystem, cell: CellBox, shift_by: int = 0) -> list[dict[int, int]]:
    """Per-position digit constraints for ``T^{-shift_by}(cell)``."""
    length = shift_by + max(cell.gens, default=0)
    cons: list[dict[int, int]] = [dict() for _ in range(length)]
    for axis in range(system.dim):
        for t, d in enumerate(cell.digits(system, axis)):
            cons[shift_by + t][axis] = d
    return cons


def cell_measure(system: ExpandingToralSystem, cell: CellBox) -> Fraction:
    cell.check(system)
    return constraint_measure(system, cell_constraints(system, cell))


# -- boxes via the digit automaton ---------------------------------------------


class _Threshold:
    """Digits of a threshold t in [0, 1] and whether t * b^D is an integer."""

    def __init__(self, t: Fraction, base: int):
        self.base = base
        self.floor0 = math.floor(t)
        self._rem = t - self.floor0
        self.digits: list[int] = [0]  # index D holds digit D (1-based)
        self.exact: list[bool] = [self._rem == 0]

    def extend(self, depth: int) -> None:
        while len(self.digits) <= depth:
            v = self._rem * self.base
            d = v.numerator // v.denominator
            self._rem = v - d
            self.digits.append(d)
            self.exact.append(self._rem == 0)


def _clamp(v: int) -> int:
    return -2 if v < -2 else (2 if v > 2 else v)


_IN = None


def _axis_status(dlo: int, dhi: int, lo_exact: bool, hi_exact: bool, closed: bool) -> int:
    """-1 outside, 1 inside, 0 straddling."""
    if dlo < 0:
        return -1
    if closed:
        if dhi > 0:
            return -1
    elif dhi > 0 or (dhi == 0 and hi_exact):
        return -1
    if (dlo >= 1 or (dlo == 0 and lo_exact)) and dhi <= -1:
        return 1
    return 0


def box_bracket(system: ExpandingToralSystem, box: Box, depth: int, closed: bool = False) -> MeasureInterval:
    """Bracket mu(box) by the generation-``depth`` cylinders inside / meeting the box."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    box = [(Fraction(lo), Fraction(hi)) for lo, hi in box]
    if len(box) != system.dim:
        raise ValueError("box dimension does not match the system")
    for lo, hi in box:
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"box side [{lo}, {hi}] not inside [0, 1]")
    if any(lo == hi for lo, hi in box) and not closed:
        return MeasureInterval(Fraction(0), Fraction(0), 0)

    lows = [_Threshold(lo, b) for (lo, _), b in zip(box, system.bases)]
    highs = [_Threshold(hi, b) for (_, hi), b in zip(box, system.bases)]
    for th in lows + highs:
        th.extend(depth)

    state0 = []
    for axis in range(system.dim):
        dlo, dhi = _clamp(-lows[axis].floor0), _clamp(-highs[axis].floor0)
        st = _axis_status(dlo, dhi, lows[axis].exact[0], highs[axis].exact[0], closed)
        if st < 0:
            return MeasureInterval(Fraction(0), Fraction(0), 0)
        state0.append(_IN if st > 0 else (dlo, dhi))
    if all(s is _IN for s in state0):
        return MeasureInterval(Fraction(1), Fraction(1), 0)

    denom = math.lcm(*(p.denominator for p in system.probs))
    weights = [(s, int(p * denom)) for s, p in enumerate(system.probs) if p > 0]
    table = system.alphabet
    bases = system.bases
    live: dict[tuple, int] = {tuple(state0): 1}
    lower = Fraction(0)
    reached = 0
    for level in range(1, depth + 1):
        reached = level
        nxt: dict[tuple, int] = defaultdict(int)
        done = 0
        for state, mass in live.items():
            for s, w in weights:
                new = []
                for axis, ast in enumerate(state):
                    if ast is _IN:
                        new.append(_IN)
                        continue
                    b = bases[axis]
                    d = table[s][axis]
                    dlo = _clamp(b * ast[0] + d - lows[axis].digits[level])
                    dhi = _clamp(b * ast[1] + d - highs[axis].digits[level])
                    st = _axis_status(dlo, dhi, lows[axis].exact[level], highs[axis].exact[level], closed)
                    if st < 0:
                        new = None
                        break
                    new.append(_IN if st > 0 else (dlo, dhi))
                if new is None:
                    continue
                if all(a is _IN for a in new):
                    done += mass * w
                else:
                    nxt[tuple(new)] += mass * w
        scale = denom**level
        lower += Fraction(done, scale)
        live = nxt
        if not live:
            return MeasureInterval(lower, lower, reached)
    pending = Fraction(sum(live.values()), denom**reached)
    return MeasureInterval(lower, lower + pending, reached)


def region_measure(source: "MeasureSource", box: Box, depth: int = DEFAULT_DEPTH, closed: bool = False) -> MeasureInterval:
    """Certified bracket on mu(box) (or mu_A(box) for a restricted measure)."""
    if isinstance(source, RestrictedMeasure):
        return source.region(box, depth, closed)
    return box_bracket(source, box, depth, closed)


def has_atoms(system: ExpandingToralSystem) -> bool:
    return any(q == 1 for marg in system.marginals for q in marg)


# -- approximate squares and local dimension -------------------------------------


@dataclass(frozen=True)
class ApproxSquare:
    """Generation-k approximate square: m^-k wide, n^-l tall with n^l <= m^k < n^(l+1)."""

    symbols: tuple[int, ...]
    split: int
    cell: CellBox

    @property
    def generation(self) -> int:
        return len(self.symbols)


def approx_square(system: ExpandingToralSystem, point: SymbolicPoint, k: int) -> ApproxSquare:
    if point.usable < k:
        raise BudgetError(f"need {k} digits, point has {point.usable}")
    syms = tuple(int(s) for s in point.symbols()[:k])
    l = system.approx_split(k)
    if system.dim == 1:
        cell = CellBox.of_word(system, syms)
    else:
        xk = yk = 0
        for t, s in enumerate(syms):
            i, j = system.alphabet[s]
            xk = xk * system.m + i
            if t < l:
                yk = yk * system.n + j
        cell = CellBox((k, l), (xk, yk))
    return ApproxSquare(syms, l, cell)


def approx_square_measure(system: ExpandingToralSystem, point: SymbolicPoint, k: int) -> Fraction:
    """prod_{t<=l} p_{w_t} * prod_{l<t<=k} q_{i_t} for the point's first k symbols."""
    sq = approx_square(system, point, k)
    out = Fraction(1)
    q = system.marginals[0]
    for t, s in enumerate(sq.symbols):
        out *= system.probs[s] if t < sq.split else q[system.alphabet[s][0]]
    return out


def cell_side(system: ExpandingToralSystem, k: int) -> float:
    """Geometric-mean side of a generation-k approximate square (the cell side in dimension 1)."""
    if system.dim == 1:
        return float(system.m) ** -k
    l = system.approx_split(k)
    return math.exp(-(k * math.log(system.m) + l * math.log(system.n)) / 2)


def log_cell_side(system: ExpandingToralSystem, k: int) -> float:
    if system.dim == 1:
        return -k * math.log(system.m)
    l = system.approx_split(k)
    return -(k * math.log(system.m) + l * math.log(system.n)) / 2


@dataclass(frozen=True)
class LocalDimension:
    value: float
    generation: int
    measure: Fraction
    off_support: bool = False


def _log_fraction(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


def local_dimension(system: ExpandingToralSystem, point: SymbolicPoint, k: int) -> LocalDimension:
    """log mu(A_k) / log side(A_k) on the generation-k approximate square (cell in dimension 1)."""
    if k < 1:
        raise ValueError("generation must be >= 1")
    mu = approx_square_measure(system, point, k)
    if mu == 0:
        return LocalDimension(math.inf, k, mu, off_support=True)
    return LocalDimension(_log_fraction(mu) / log_cell_side(system, k), k, mu)


def entropy(weights: Iterable[Fraction]) -> float:
    return -sum(float(w) * math.log(float(w)) for w in weights if w > 0)


@dataclass(frozen=True)
class DimensionEstimate:
    closed_form: float
    monte_carlo: float
    stderr: float
    samples: int
    generation: int

    @property
    def agrees(self) -> bool:
        return abs(self.closed_form - self.monte_carlo) <= 3 * self.stderr


def dimension_closed_form(system: ExpandingToralSystem) -> float:
    if system.dim == 1:
        return entropy(system.probs) / math.log(system.m)
    m, n = system.bases
    return entropy(system.probs) / math.log(n) + entropy(system.marginals[0]) * (1 / math.log(m) - 1 / math.log(n))


def measure_dimension(system: ExpandingToralSystem, samples: int = 200, generation: int = 40, seed: int = 0) -> DimensionEstimate:
    """Closed-form dimension of mu and a Monte Carlo mean of local dimensions at ``generation``."""
    vals = np.array(
        [local_dimension(system, sample_symbols_point(system, generation, seed, i), generation).value for i in range(samples)]
    )
    stderr = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return DimensionEstimate(dimension_closed_form(system), float(vals.mean()), stderr, samples, generation)


def sample_symbols_point(system: ExpandingToralSystem, length: int, seed: int, index: int) -> SymbolicPoint:
    from .system import sample_point

    return sample_point(system, length, seed, index)


# -- projections -------------------------------------------------------------------


def _expansion(t: Fraction, base: int) -> tuple[list[int], list[int]]:
    """Eventually periodic base-``base`` digits of t in [0,1): (preperiod, period)."""
    seen: dict[Fraction, int] = {}
    digits: list[int] = []
    rem = t
    while rem not in seen:
        seen[rem] = len(digits)
        v = rem * base
        d = v.numerator // v.denominator
        digits.append(d)
        rem = v - d
    start = seen[rem]
    return digits[:start], digits[start:]


def _series(digits: list[int], q: Sequence[Fraction], below: Sequence[Fraction]) -> tuple[Fraction, Fraction]:
    """(sum_t prod_{s<t} q_{d_s} * below[d_t], prod_t q_{d_t}) over a finite digit block."""
    acc, run = Fraction(0), Fraction(1)
    for d in digits:
        acc += run * below[d]
        run *= q[d]
    return acc, run


def marginal_cdf(q: Sequence[Fraction], base: int, t: Fraction) -> Fraction:
    """P(X < t) for X = sum d_k base^-k with i.i.d. digits of law q."""
    t = Fraction(t)
    if t <= 0:
        return Fraction(0)
    if t >= 1:
        return 1 - (Fraction(1) if q[base - 1] == 1 else Fraction(0))
    below = [sum(q[:d], Fraction(0)) for d in range(base)]
    pre, per = _expansion(t, base)
    s_pre, r_pre = _series(pre, q, below)
    s_per, r_per = _series(per, q, below)
    if r_per == 1:
        return s_pre + r_pre * s_per
    return s_pre + r_pre * s_per / (1 - r_per)


def _point_mass(q: Sequence[Fraction], base: int, t: Fraction) -> Fraction:
    """P(X = t): nonzero only when some digit expansion of t is eventually q-deterministic."""
    if t < 0 or t > 1:
        return Fraction(0)
    total = Fraction(0)
    expansions = []
    if t < 1:
        expansions.append(_expansion(t, base))
    if t > 0:
        # the other expansion, ending in (base-1)'s, exists when t is base-adic
        v, g = t, 0
        while v.denominator != 1 and g < 4096 and base**g % v.denominator:
            g += 1
        if (t * base**g).denominator == 1:
            k = int(t * base**g)
            head = []
            kk = k - 1
            for _ in range(g):
                kk, d = divmod(kk, base)
                head.append(d)
            expansions.append((head[::-1], [base - 1]))
    for pre, per in expansions:
        run = Fraction(1)
        for d in pre:
            run *= q[d]
        cyc = Fraction(1)
        for d in per:
            cyc *= q[d]
        if cyc == 1:
            total += run
    return total


def projection_measure(system: ExpandingToralSystem, axis: int, interval: tuple, closed: bool = False) -> Fraction:
    """Exact mu(Pi_axis^{-1}[a, b)) from the Bernoulli digit law of that axis."""
    if not 0 <= axis < system.dim:
        raise IndexError(f"axis {axis} out of range for dimension {system.dim}")
    a, b = Fraction(interval[0]), Fraction(interval[1])
    if not 0 <= a <= b <= 1:
        raise ValueError("interval must lie in [0, 1]")
    q, base = system.marginals[axis], system.bases[axis]
    val = marginal_cdf(q, base, b) - marginal_cdf(q, base, a)
    if closed:
        val += _point_mass(q, base, b)
    return val


# -- balls -------------------------------------------------------------------------------


def _arc(c: Fraction, r: Fraction) -> list[tuple[Fraction, Fraction]]:
    if 2 * r >= 1:
        return [(Fraction(0), Fraction(1))]
    lo, hi = c - r, c + r
    if lo < 0:
        return [(Fraction(0), hi), (lo + 1, Fraction(1))]
    if hi > 1:
        return [(Fraction(0), hi - 1), (lo, Fraction(1))]
    return [(lo, hi)]


def ball_boxes(center: Sequence[Fraction], r: Fraction) -> list[list[tuple[Fraction, Fraction]]]:
    """Split a sup-norm torus ball into at most 2^d boxes inside [0,1]^d."""
    arcs = [_arc(Fraction(c) % 1, Fraction(r)) for c in center]
    boxes: list[list[tuple[Fraction, Fraction]]] = [[]]
    for pieces in arcs:
        boxes = [b + [p] for b in boxes for p in pieces]
    return boxes


def resolve_center(center: SymbolicPoint | Sequence, digits: int = CENTER_DIGITS) -> tuple[tuple[Fraction, ...], Fraction]:
    """Exact center coordinates and the truncation error (zero for rational input)."""
    if isinstance(center, SymbolicPoint):
        coords, errs = embed(center, max_digits=digits)
        err = max(errs) if center.usable > digits else Fraction(0)
        return coords, err
    return tuple(Fraction(c) for c in center), Fraction(0)


def _ball_bracket(system: ExpandingToralSystem, center: Sequence[Fraction], r: Fraction, depth: int) -> MeasureInterval:
    closed = has_atoms(system)
    total = MeasureInterval(Fraction(0), Fraction(0), depth)
    for box in ball_boxes(center, r):
        part = box_bracket(system, box, depth, closed=closed and all(hi < 1 for _, hi in box))
        total = total + MeasureInterval(part.lower, part.upper, depth)
    return total


def ball_measure(
    source: "MeasureSource", center: SymbolicPoint | Sequence, r: Fraction | int | str, depth: int = DEFAULT_DEPTH
) -> MeasureInterval:
    """Bracket on the measure of the closed sup-norm ball B(center, r) on the torus."""
    r = Fraction(r)
    if r <= 0:
        raise ValueError("radius must be positive")
    total_mass = Fraction(1)
    if 2 * r >= 1:
        return MeasureInterval(total_mass, total_mass, 0)
    coords, err = resolve_center(center)
    if isinstance(source, RestrictedMeasure):
        return source.ball(coords, r, depth, err)
    if err == 0:
        res = _ball_bracket(source, coords, r, depth)
    else:
        inner = _ball_bracket(source, coords, max(r - err, Fraction(0)), depth) if r > err else None
        outer = _ball_bracket(source, coords, r + err, depth)
        res = MeasureInterval(inner.lower if inner else Fraction(0), outer.upper, depth)
    return MeasureInterval(res.lower, min(res.upper, total_mass), res.depth)


@dataclass(frozen=True)
class RadiusBracket:
    r_lo: Fraction
    r_hi: Fraction
    mass_lo: MeasureInterval
    mass_hi: MeasureInterval
    precise: bool

    @property
    def width(self) -> Fraction:
        return self.r_hi - self.r_lo


def inverse_radius(
    source: "MeasureSource",
    center: SymbolicPoint | Sequence,
    target: Fraction | str | int,
    tolerance: Fraction | str | float = Fraction(1, 2**20),
    depth: int | None = None,
    max_depth: int | None = None,
) -> RadiusBracket:
    """Bisection for the radius at which the ball mass crosses ``target``.

    Returns r_lo <= r_hi with ``ball(r_lo).upper <= target <= ball(r_hi).lower``.
    When brackets cannot separate the target at ``max_depth`` the current
    bracket is returned with ``precise=False``.
    """
    target = Fraction(target)
    tolerance = Fraction(tolerance)
    if not 0 < target <= 1:
        raise ValueError("target mass must lie in (0, 1]")
    system = source.system if isinstance(source, RestrictedMeasure) else source
    if depth is None:
        depth = int(math.ceil(math.log(1 / float(tolerance)) / math.log(system.m))) + 8
    if max_depth is None:
        max_depth = depth + 48
    lo, hi = Fraction(0), Fraction(1, 2)
    m_lo = MeasureInterval(Fraction(0), Fraction(0), 0)
    m_hi = ball_measure(source, center, hi, depth)
    precise = True
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        d = depth
        while True:
            mb = ball_measure(source, center, mid, d)
            if mb.upper <= target:
                lo, m_lo = mid, mb
                break
            if mb.lower >= target:
                hi, m_hi = mid, mb
                break
            if d >= max_depth:
                # target sits at (or extremely near) mu(B(c, mid)): straddle mid
                step = tolerance / 4
                below = ball_measure(source, center, max(mid - step, lo), d)
                above = ball_measure(source, center, min(mid + step, hi), d)
                if below.upper <= target <= above.lower:
                    lo, m_lo, hi, m_hi = max(mid - step, lo), below, min(mid + step, hi), above
                else:
                    precise = False
                break
            d = min(max_depth, d + 12)
        if not precise:
            break
    return RadiusBracket(lo, hi, m_lo, m_hi, precise)


# -- restricted measures --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RestrictedMeasure:
    """mu_A(E) = mu(E cap A) / mu(A) for A a finite union of disjoint cells."""

    system: ExpandingToralSystem
    cells: tuple[CellBox, ...]
    mass: Fraction = field(init=False)

    def __post_init__(self) -> None:
        if not self.cells:
            raise ValueError("restriction set is empty")
        for c in self.cells:
            c.check(self.system)
        for i, a in enumerate(self.cells):
            for b in self.cells[i + 1 :]:
                if cells_intersect(a, b, self.system):
                    raise ValueError(f"cells {a} and {b} overlap")
        mass = sum((cell_measure(self.system, c) for c in self.cells), Fraction(0))
        if mass == 0:
            raise ValueError("restriction set has zero mu-measure")
        object.__setattr__(self, "mass", mass)

    def cell(self, cell: CellBox) -> Fraction:
        """Exact mu_A of an adic cell."""
        total = Fraction(0)
        for a in self.cells:
            if cells_intersect(a, cell, self.system):
                joint = CellBox(
                    tuple(max(g1, g2) for g1, g2 in zip(a.gens, cell.gens)),
                    tuple(k1 if g1 >= g2 else k2 for g1, g2, k1, k2 in zip(a.gens, cell.gens, a.indices, cell.indices)),
                )
                total += cell_measure(self.system, joint)
        return total / self.mass

    def region(self, box: Box, depth: int = DEFAULT_DEPTH, closed: bool = False) -> MeasureInterval:
        total = MeasureInterval(Fraction(0), Fraction(0), depth)
        for a in self.cells:
            inter = []
            for (lo, hi), (clo, chi) in zip(box, a.bounds(self.system)):
                lo2, hi2 = max(Fraction(lo), clo), min(Fraction(hi), chi)
                if lo2 > hi2 or (lo2 == hi2 and not closed):
                    inter = None
                    break
                inter.append((lo2, hi2))
            if inter is None:
                continue
            part = box_bracket(self.system, inter, depth, closed)
            total = total + MeasureInterval(part.lower, part.upper, depth)
        return total.scale(1 / self.mass)

    def ball(self, center: Sequence[Fraction], r: Fraction, depth: int = DEFAULT_DEPTH, err: Fraction = Fraction(0)) -> MeasureInterval:
        closed = has_atoms(self.system)

        def bracket(radius: Fraction) -> MeasureInterval:
            total = MeasureInterval(Fraction(0), Fraction(0), depth)
            for box in ball_boxes(center, radius):
                total = total + self.region(box, depth, closed=closed and all(hi < 1 for _, hi in box))
            return total

        if err == 0:
            res = bracket(r)
        else:
            inner = bracket(r - err) if r > err else MeasureInterval(Fraction(0), Fraction(0), depth)
            res = MeasureInterval(inner.lower, bracket(r + err).upper, depth)
        return MeasureInterval(res.lower, min(res.upper, Fraction(1)), res.depth)

    def sample(self, length: int, seed: int, index: int = 0) -> SymbolicPoint:
        """Exact draw from mu_A: pick a cell by mass, then symbols conditioned on its digits."""
        rng = rng_for(seed, index)
        masses = [float(cell_measure(self.system, c) / self.mass) for c in self.cells]
        cell = self.cells[int(np.searchsorted(np.cumsum(masses)[:-1], rng.random(), side="right"))]
        syms = draw_symbols(self.system, rng, length)
        for t, con in enumerate(cell_constraints(self.system, cell)[:length]):
            if not con:
                continue
            allowed = [s for s, sym in enumerate(self.system.alphabet) if all(sym[a] == d for a, d in con.items())]
            w = np.array([float(self.system.probs[s]) for s in allowed])
            syms[t] = allowed[int(np.searchsorted(np.cumsum(w / w.sum())[:-1], rng.random(), side="right"))]
        syms.setflags(write=False)
        return SymbolicPoint(self.system, syms)

    def contains_point(self, point: SymbolicPoint) -> bool:
        from .orbit import cell_mask

        return bool(cell_mask(point, self.cells, 0, 1)[0])

    def diagnostics(self, test_radii: Sequence[Fraction], samples: int, generations: Sequence[int], seed: int = 0, depth: int = DEFAULT_DEPTH) -> dict:
        """Boundary-mass brackets of test balls and the local-dimension spread of mu_A samples."""
        ldims = []
        widths = []
        length = max(generations) + 8
        for i in range(samples):
            pt = self.sample(length, seed, i)
            vals = [local_dimension(self.system, pt, k).value for k in generations]
            ldims.append((min(vals), max(vals)))
            for r in test_radii:
                widths.append(float(self.ball(embed(pt)[0], Fraction(r), depth).width))
        lows = [a for a, _ in ldims]
        highs = [b for _, b in ldims]
        return {
            "mass": self.mass,
            "max_boundary_width": max(widths) if widths else 0.0,
            "lower_local_dim": (min(lows), max(lows)),
            "upper_local_dim": (min(highs), max(highs)),
            "ratio_upper_lower": max(highs) / min(lows) if min(lows) > 0 else math.inf,
        }


MeasureSource = Union[ExpandingToralSystem, RestrictedMeasure]


def restrict(system: ExpandingToralSystem, cells: Sequence[CellBox]) -> RestrictedMeasure:
    return RestrictedMeasure(system, tuple(cells))
