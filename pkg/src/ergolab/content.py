"""Hausdorff contents, coarse multifractal spectra, and the 1-Lipschitz envelope.

Sizes are sup-norm diameters.  Coarse spectra use the approximate-square
partition of generation n (cells in dimension 1); the exponent of a cell is
log mu(D) / log side(D) with side the geometric mean of its width and height,
so Lebesgue measure gives exponent d for every cell.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .measure import log_cell_side
from .system import BudgetError, ExpandingToralSystem

Box = Sequence[tuple[Fraction, Fraction]]


# -- Hausdorff content upper bounds ------------------------------------------------------


def _meets(cube: list[tuple[Fraction, Fraction]], box: Box) -> bool:
    return all(lo <= chi and clo <= hi for (clo, chi), (lo, hi) in zip(cube, box))


def _inside(cube: list[tuple[Fraction, Fraction]], box: Box) -> bool:
    return all(lo <= clo and chi <= hi for (clo, chi), (lo, hi) in zip(cube, box))


def hausdorff_content_upper(boxes: Sequence[Box], s: float, depth: int = 8) -> float:
    """Best sum of diam^s over the hull and every dyadic refinement of the bounding cube down to ``depth``.

    Each cube of the hierarchy is either kept whole or replaced by its
    children that meet the set, whichever is cheaper (bottom-up minimum), so
    the value is an upper bound for H^s_inf of the union of closed boxes.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    boxes = [[(Fraction(lo), Fraction(hi)) for lo, hi in b] for b in boxes]
    if not boxes:
        return 0.0
    d = len(boxes[0])
    lows = [min(b[a][0] for b in boxes) for a in range(d)]
    highs = [max(b[a][1] for b in boxes) for a in range(d)]
    side = max(h - l for l, h in zip(lows, highs))
    hull = float(side) ** s if side > 0 else (1.0 if s == 0 else 0.0)
    if side == 0:
        return hull

    def cost(cube: list[tuple[Fraction, Fraction]], level: int, live: list) -> float:
        width = float(cube[0][1] - cube[0][0])
        whole = width**s
        if level == depth:
            return whole
        if any(_inside(cube, b) for b in live):
            # a covered cube: splitting k more times costs whole * 2^(k (d - s))
            return whole * min(1.0, 2.0 ** ((depth - level) * (d - s)))
        total = 0.0
        for corner in range(2**d):
            child = []
            for a in range(d):
                lo, hi = cube[a]
                mid = (lo + hi) / 2
                child.append((mid, hi) if corner >> a & 1 else (lo, mid))
            sub = [b for b in live if _meets(child, b)]
            if sub:
                total += cost(child, level + 1, sub)
            if total >= whole:
                return whole
        return min(whole, total)

    root = [(lo, lo + side) for lo in lows]
    return min(hull, cost(root, 0, boxes))


@dataclass(frozen=True)
class ContentBound:
    value: float
    s: float
    eps: float
    dim_estimate: float
    radius: float


def essential_content_lower(system: ExpandingToralSystem, r: float, s: float, eps: float, dim_estimate: float | None = None) -> ContentBound:
    """(1 / 2^(d+1)) r^(s (dim + eps) / (dim - eps)) for a ball of radius r on the regular set of mu."""
    from .measure import dimension_closed_form

    dim = dimension_closed_form(system) if dim_estimate is None else dim_estimate
    if eps <= 0 or eps >= dim:
        raise ValueError("need 0 < eps < dim")
    if s > dim - eps:
        raise ValueError(f"s = {s} exceeds dim - eps = {dim - eps}")
    if s < 0 or r <= 0:
        raise ValueError("need s >= 0 and r > 0")
    value = 2.0 ** -(system.dim + 1) * float(r) ** (s * (dim + eps) / (dim - eps))
    return ContentBound(value, s, eps, dim, float(r))


# -- coarse spectrum ---------------------------------------------------------------------


def _convolve(classes: dict[Fraction, int], weights: Sequence[Fraction]) -> dict[Fraction, int]:
    out: dict[Fraction, int] = defaultdict(int)
    for mass, cnt in classes.items():
        for w in weights:
            out[mass * w] += cnt
    return out


def cell_mass_classes(system: ExpandingToralSystem, generation: int) -> dict[Fraction, int]:
    """Exact mu-mass -> number of positive-mass generation-n approximate squares (cells in dim 1)."""
    if generation < 0:
        raise ValueError("generation must be >= 0")
    l = system.approx_split(generation)
    p = [w for w in system.probs if w > 0]
    q = [w for w in system.marginals[0] if w > 0]
    classes: dict[Fraction, int] = {Fraction(1): 1}
    for t in range(generation):
        classes = _convolve(classes, p if t < l else q)
    return dict(classes)


@dataclass(frozen=True)
class SpectrumTable:
    generation: int
    eps: float
    h: list[float]
    counts: list[int]
    exponents: list[float]
    total_cells: int
    log_side: float

    def rows(self) -> list[dict]:
        return [{"h": h, "count": c, "exponent": e} for h, c, e in zip(self.h, self.counts, self.exponents)]


def _log_frac(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


def coarse_spectrum(system: ExpandingToralSystem, generation: int, eps: float, h_grid: Sequence[float], budget: int = 10**7) -> SpectrumTable:
    """N_n(h, eps) = #{D : |D|^(h+eps) <= mu(D) <= |D|^(h-eps)} with exponent log N / log(1/|D|)."""
    classes = cell_mass_classes(system, generation)
    if len(classes) > budget:
        raise BudgetError(f"{len(classes)} distinct cell masses exceed the budget {budget}")
    log_side = log_cell_side(system, generation)
    total = sum(classes.values())
    if generation == 0:
        raise ValueError("generation must be >= 1")
    hs = np.array([_log_frac(m) / log_side for m in classes])
    cnt = np.array(list(classes.values()), dtype=object)
    counts, exps = [], []
    tol = 1e-12
    for h in h_grid:
        sel = (hs >= h - eps - tol) & (hs <= h + eps + tol)
        c = int(sum(cnt[sel])) if sel.any() else 0
        counts.append(c)
        exps.append(math.log(c) / -log_side if c > 0 else -math.inf)
    return SpectrumTable(generation, eps, [float(h) for h in h_grid], counts, exps, total, log_side)


@dataclass(frozen=True)
class LevelHistogram:
    edges: np.ndarray
    counts: np.ndarray
    mass: np.ndarray
    h_min: float
    h_max: float

    def mass_mode(self) -> float:
        i = int(np.argmax(self.mass))
        return float((self.edges[i] + self.edges[i + 1]) / 2)


def level_set_histogram(system: ExpandingToralSystem, generation: int, bins: int | Sequence[float] = 40) -> LevelHistogram:
    """Histogram of cell exponents weighted by cell count and by mu-mass."""
    classes = cell_mass_classes(system, generation)
    log_side = log_cell_side(system, generation)
    hs = np.array([_log_frac(m) / log_side for m in classes])
    cnt = np.array([float(c) for c in classes.values()])
    mass = np.array([float(m * c) for m, c in classes.items()])
    if isinstance(bins, int):
        lo, hi = float(hs.min()), float(hs.max())
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    counts, _ = np.histogram(hs, bins=edges, weights=cnt)
    masses, _ = np.histogram(hs, bins=edges, weights=mass)
    return LevelHistogram(edges, counts, masses, float(hs.min()), float(hs.max()))


def mass_near(system: ExpandingToralSystem, generation: int, center: float, width: float) -> float:
    """mu-mass of generation-n cells whose exponent is within ``width`` of ``center``."""
    classes = cell_mass_classes(system, generation)
    log_side = log_cell_side(system, generation)
    return float(sum((m * c for m, c in classes.items() if abs(_log_frac(m) / log_side - center) <= width), Fraction(0)))


# -- 1-Lipschitz envelope -------------------------------------------------------------------


def lipschitz_envelope(xs: Sequence[float], g: Sequence[float]) -> np.ndarray:
    """ghat_i = max_j (g_j - |x_i - x_j|): the least 1-Lipschitz majorant of g on the grid.

    Two sweeps: the left-to-right pass propagates max_{j<=i}(g_j - (x_i - x_j)),
    the right-to-left pass the mirror image.
    """
    x = np.asarray(xs, dtype=float)
    v = np.asarray(g, dtype=float)
    if x.size == 0:
        raise ValueError("empty grid")
    if x.shape != v.shape:
        raise ValueError("grid and values differ in length")
    if np.any(np.diff(x) < 0):
        raise ValueError("grid must be sorted")
    fwd = v.copy()
    for i in range(1, x.size):
        fwd[i] = max(fwd[i], fwd[i - 1] - (x[i] - x[i - 1]))
    bwd = v.copy()
    for i in range(x.size - 2, -1, -1):
        bwd[i] = max(bwd[i], bwd[i + 1] - (x[i + 1] - x[i]))
    return np.maximum(fwd, bwd)
