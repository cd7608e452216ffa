"""Dynamical covering sets E(x, r) = {y : ||y - T^n x|| <= r_n infinitely often}.

The set itself is out of reach at finite resolution, so its dimension is read
off the natural cover: at scale j (grid cells m^-j wide; on the carpet the
approximate-square grid with rows n^-l) the balls B(T^n x, r_n) whose radius
falls in the octave [m^-(j+1), m^-j) are rasterized exactly onto the grid and
the hit cells counted.  The slope of log count against j log m is the
dimension proxy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .content import essential_content_lower
from .measure import MeasureSource, RestrictedMeasure, ball_measure, dimension_closed_form, inverse_radius
from .orbit import OrbitWindows, ball_mask, coord_bounds, digit_windows, window_width
from .radii import RadiusSequence
from .system import BudgetError, ExpandingToralSystem, SymbolicPoint, induced_orbit, rng_for, sample_point, shift

MAX_CELLS = 50_000_000
Y_DIGITS = 128


def grid_gens(system: ExpandingToralSystem, j: int) -> tuple[int, ...]:
    """Per-axis generations of the scale-j grid: (j,) or (j, l(j)) with n^l <= m^j."""
    if system.dim == 1:
        return (j,)
    return (j, system.approx_split(j))


def octave_window(radii: RadiusSequence, base: int, j: int) -> tuple[int, int]:
    """Indices n with r_n in [base^-(j+1), base^-j); a constant sequence uses the single ball n = 1."""
    if radii.kind == "constant":
        return (1, 1)
    n0 = radii.first_below(Fraction(1, base**j))
    n1 = radii.first_below(Fraction(1, base ** (j + 1))) - 1
    return (n0, n1)


def _edge_exact(point: SymbolicPoint, n: int, axis: int, g: int, radius, K: int, upper: bool) -> bool:
    """upper: K b^-g <= c + r_n;  lower: K b^-g <= c - r_n  (c the axis coordinate of T^n x)."""
    base = point.system.bases[axis]
    a = Fraction(K, base**g)
    ndig = g + 64
    while True:
        lo, w = coord_bounds(point, n, axis, ndig)
        if upper:
            # a - c <= r with c in [lo, lo + w]
            if radius.compare(n, a - lo) <= 0:
                return True
            if radius.compare(n, a - lo - w) > 0:
                return False
        else:
            # c - a >= r
            if radius.compare(n, lo - a) >= 0:
                return True
            if radius.compare(n, lo + w - a) < 0:
                return False
        ndig *= 2


def _axis_ranges(point: SymbolicPoint, ns: np.ndarray, axis: int, g: int, radius) -> tuple[np.ndarray, np.ndarray]:
    """Floors of (c - r_n) b^g and (c + r_n) b^g, i.e. the first and last cell index hit on this axis."""
    base = point.system.bases[axis]
    G = window_width(base)
    w = digit_windows(point.axis_digits(axis), base, int(ns[0]), len(ns), G)
    c = w.astype(np.float64) / float(base) ** G
    r = radius.floats(ns)
    scale = float(base) ** g
    hi_v = np.minimum((c + r) * scale, 4 * scale)
    lo_v = np.maximum((c - r) * scale, -4 * scale)
    khi = np.floor(hi_v).astype(np.int64)
    klo = np.floor(lo_v).astype(np.int64)
    tol = 1e-6
    for vals, ks, upper in ((hi_v, khi, True), (lo_v, klo, False)):
        near = np.abs(vals - np.round(vals)) < tol
        for i in np.flatnonzero(near & (np.abs(vals) < 2 * scale)):
            n = int(ns[i])
            k = int(np.round(vals[i]))
            # largest K with the edge predicate true is the floor
            ks[i] = k if _edge_exact(point, n, axis, g, radius, k, upper) else k - 1
    return klo, khi


@dataclass(frozen=True)
class CoverCount:
    scale: int
    count: int
    window: tuple[int, int]
    gens: tuple[int, ...]
    empty_window: bool = False
    cells: np.ndarray | None = field(default=None, repr=False)


def limsup_cells(
    x: SymbolicPoint,
    radii: RadiusSequence,
    j: int,
    window: tuple[int, int] | None = None,
    keep_cells: bool = False,
) -> CoverCount:
    """Number of scale-j grid cells met by the closed balls B(T^n x, r_n), n in the window."""
    system = x.system
    gens = grid_gens(system, j)
    if window is None:
        window = octave_window(radii, system.m, j)
    n0, n1 = window
    if n1 < n0:
        return CoverCount(j, 0, window, gens, empty_window=True, cells=np.zeros(0, np.int64) if keep_cells else None)
    if n1 + 1 > x.usable:
        raise BudgetError(f"window end {n1} exceeds the {x.usable} stored digits")
    sizes = [b**g for b, g in zip(system.bases, gens)]
    ns = np.arange(n0, n1 + 1)
    spans = []
    for axis, g in enumerate(gens):
        klo, khi = _axis_ranges(x, ns, axis, g, radii)
        length = np.minimum(khi - klo + 1, sizes[axis])
        spans.append((klo, length))
    work = len(ns) * math.prod(int(l.max()) for _, l in spans)
    if work > MAX_CELLS:
        raise BudgetError(f"rasterizing the window needs {work} cell visits")
    ids = []
    offsets = [range(int(l.max())) for _, l in spans]
    for combo in np.ndindex(*[len(o) for o in offsets]):
        ok = np.ones(len(ns), dtype=bool)
        cid = np.zeros(len(ns), dtype=np.int64)
        for axis, o in enumerate(combo):
            klo, length = spans[axis]
            ok &= o < length
            cid = cid * sizes[axis] + np.mod(klo + o, sizes[axis])
        ids.append(cid[ok])
    cells = np.unique(np.concatenate(ids)) if ids else np.zeros(0, np.int64)
    return CoverCount(j, int(cells.size), window, gens, cells=cells if keep_cells else None)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    counts: list[CoverCount]
    used: list[int]
    residuals: list[float]
    dropped: list[int]


def dimension_slope(x: SymbolicPoint, radii: RadiusSequence, scales: Sequence[int], trim: int = 0) -> SlopeFit:
    """Least-squares slope of log(count) against j log m over the scales (zero counts dropped)."""
    scales = sorted(scales)
    if len(scales) < 3:
        raise ValueError("need at least 3 scales")
    counts = [limsup_cells(x, radii, j) for j in scales]
    dropped = [c.scale for c in counts if c.count == 0]
    use = [c for c in counts if c.count > 0]
    if trim:
        use = use[trim:-trim]
    if len(use) < 3:
        raise ValueError("fewer than 3 usable scales after dropping empty ones")
    logm = math.log(x.system.m)
    X = np.array([c.scale * logm for c in use])
    Y = np.array([math.log(c.count) for c in use])
    A = np.vstack([X, np.ones_like(X)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - (slope * X + intercept)
    dof = len(X) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / float(((X - X.mean()) ** 2).sum())) if dof > 0 else math.inf
    return SlopeFit(float(slope), stderr, float(intercept), counts, [c.scale for c in use], resid.tolist(), dropped)


# -- coverage of mu-typical targets ------------------------------------------------------


def _sample_target(source: MeasureSource, seed: int, index: int) -> SymbolicPoint:
    if isinstance(source, RestrictedMeasure):
        return source.sample(Y_DIGITS, seed, index)
    return sample_point(source, Y_DIGITS, seed, index)


@dataclass(frozen=True)
class CoverageResult:
    fraction: float
    covered: list[bool]
    window: tuple[int, int]
    induced_hits: int | None = None


def coverage_fraction(
    source: MeasureSource,
    x: SymbolicPoint,
    radii: RadiusSequence,
    num_samples: int,
    horizon: int,
    seed: int = 0,
    tail_start: int | None = None,
) -> CoverageResult:
    """Fraction of sampled targets y with ||T^n x - y|| <= r_n for some n in [horizon/10, horizon].

    With a restricted measure mu_A the targets are drawn from mu_A and only the
    induced times n = n_A^k(x) in the window count, each with radius r_{n_A^k}.
    """
    from .system import embed

    if horizon + 1 > x.usable:
        raise BudgetError(f"horizon {horizon} exceeds the {x.usable} stored digits of x")
    start = max(1, horizon // 10) if tail_start is None else tail_start
    count = horizon - start + 1
    wins = OrbitWindows(x, start, count)
    select = None
    induced_hits = None
    if isinstance(source, RestrictedMeasure):
        orbit = induced_orbit(x, source.cells, horizon, horizon)
        times = np.array([h for h in orbit.hits if h >= start], dtype=np.int64)
        select = times - start
        induced_hits = int(times.size)
    covered = []
    for i in range(num_samples):
        center = embed(_sample_target(source, seed, i))[0]
        mask = ball_mask(x, center, radii, start, count, windows=wins)
        covered.append(bool(mask[select].any() if select is not None else mask.any()))
    return CoverageResult(sum(covered) / num_samples, covered, (start, horizon), induced_hits)


# -- mass transference hypotheses -----------------------------------------------------------


def mass_transference_check(
    x: SymbolicPoint,
    radii: RadiusSequence,
    s: float,
    delta: Fraction | int | str,
    num_samples: int = 200,
    seed: int = 0,
    horizon: int | None = None,
    num_indices: int = 1000,
    eps: float = 0.01,
) -> dict:
    """Empirical pass rates of the two hypotheses of mass transference.

    * half-ball coverage: :func:`coverage_fraction` with radii r_n / 2;
    * content: H^{mu,s}_inf(B(T^n x, r_n^delta)) >= mu(B(T^n x, r_n)) on sampled n.
      Lebesgue systems use the exact sup-norm value (2 rho)^s; other systems the
      certified lower bound of :func:`essential_content_lower`.  s = 0 gives 1.
    """
    system = x.system
    delta = Fraction(delta)
    if delta < 1:
        raise ValueError("contraction exponent delta must be >= 1")
    if horizon is None:
        horizon = x.usable - window_width(system.n) - 1
    cov = coverage_fraction(system, x, radii.scaled(Fraction(1, 2)), num_samples, horizon, seed)
    rng = rng_for(seed, 1)
    ns = np.sort(rng.integers(max(2, horizon // 10), horizon + 1, size=num_indices))
    dim = dimension_closed_form(system)
    passes = 0
    method = "lebesgue-exact" if system.is_lebesgue else "essential-lower-bound"
    for n in ns.tolist():
        r = float(radii(n))
        rho = r ** float(delta)
        if s == 0:
            content = 1.0
        elif system.is_lebesgue:
            content = min(2 * rho, 1.0) ** s
        else:
            content = essential_content_lower(system, rho, s, eps, dim).value
        if system.is_lebesgue:
            mass = min(2 * r, 1.0) ** system.dim
        else:
            center = shift(x, n)
            mass = float(ball_measure(system, center, Fraction(r).limit_denominator(2**62), 24).upper)
        passes += content >= mass
    return {
        "half_ball_coverage": cov.fraction,
        "coverage_window": list(cov.window),
        "content_pass_rate": passes / len(ns),
        "content_method": method,
        "indices": len(ns),
        "s": s,
        "delta": float(delta),
    }


# -- theta_n(x) ------------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaBracket:
    n: int
    r_lo: Fraction
    r_hi: Fraction
    theta_lo: float
    theta_hi: float
    precise: bool


def theta_sequence(
    x: SymbolicPoint, source: MeasureSource, ns: Sequence[int], tolerance: Fraction = Fraction(1, 2**24)
) -> list[ThetaBracket]:
    """theta_n with mu(B(T^n x, n^-theta)) = 1/n, bracketed through :func:`inverse_radius`."""
    out = []
    for n in ns:
        if n < 2:
            raise ValueError("theta is undefined for n < 2 (target mass 1/n must be below the total mass)")
        if n >= x.usable:
            raise BudgetError(f"index {n} beyond the {x.usable} stored digits")
        br = inverse_radius(source, shift(x, n), Fraction(1, n), tolerance)
        ln = math.log(n)
        th_lo = -math.log(br.r_hi) / ln
        th_hi = -math.log(br.r_lo) / ln if br.r_lo > 0 else math.inf
        out.append(ThetaBracket(n, br.r_lo, br.r_hi, th_lo, th_hi, br.precise))
    return out
