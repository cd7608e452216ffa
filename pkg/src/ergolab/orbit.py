"""Vectorised, exact orbit scans.

Orbit points T^n(x) are read off the digit stream through fixed-width integer
windows: ``W[n]`` is the integer formed by the ``G`` digits following position
``n``, so ``T^n(x)`` lies in ``[W/b^G, (W+1)/b^G)``.  Ball-membership decisions
made on windows are certified by a guard band; the rare undecided indices are
settled with exact rational arithmetic on as many stored digits as needed.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np

from .system import SymbolicPoint, digits_to_int

_GUARD_REL = 1e-12
_GUARD_ABS = 4.0


class RadiusLike(Protocol):
    def floats(self, ns: np.ndarray) -> np.ndarray:
        """Radii r_n as floats, used for the fast path only."""

    def contains(self, n: int, d: Fraction) -> bool:
        """Exact test d <= r_n."""


class ConstantRadius:
    def __init__(self, r: Fraction | int | str):
        self.r = Fraction(r)
        if self.r <= 0:
            raise ValueError("radius must be positive")

    def floats(self, ns: np.ndarray) -> np.ndarray:
        return np.full(len(ns), float(self.r))

    def contains(self, n: int, d: Fraction) -> bool:
        return d <= self.r

    def compare(self, n: int, d: Fraction) -> int:
        return (d > self.r) - (d < self.r)


def window_width(base: int) -> int:
    """Number of base-``base`` digits whose value stays below 2**62."""
    g = int(62 * math.log(2) / math.log(base))
    while base ** (g + 1) < 2**62:
        g += 1
    while base**g >= 2**62:
        g -= 1
    return g


def digit_windows(digits: np.ndarray, base: int, start: int, count: int, width: int) -> np.ndarray:
    """``W[i] = sum_{t<width} digits[start+i+t] * base**(width-1-t)`` (zero padded)."""
    seg_len = count + width - 1
    seg = np.zeros(seg_len, dtype=np.int64)
    avail = digits[start : start + seg_len]
    seg[: len(avail)] = avail
    blocks = {1: seg}
    w = 1
    while 2 * w <= width:
        prev = blocks[w]
        blocks[2 * w] = prev[: len(prev) - w] * base**w + prev[w:]
        w *= 2
    acc = np.zeros(count, dtype=np.int64)
    pos = 0
    for bit in sorted(blocks, reverse=True):
        if width & bit:
            acc = acc * base**bit + blocks[bit][pos : pos + count]
            pos += bit
    return acc


def coord_bounds(point: SymbolicPoint, n: int, axis: int, ndigits: int) -> tuple[Fraction, Fraction]:
    """Lower value of axis ``axis`` of T^n(x) from ``ndigits`` digits, and the remaining-width bound."""
    base = point.system.bases[axis]
    digs = point.axis_digits(axis)[n : n + ndigits]
    num = digits_to_int(digs, base)
    used = len(digs)
    rest = Fraction(1, base**used) if n + used < point.usable else Fraction(0)
    return Fraction(num, base**used), rest


def torus_distance(a: Fraction, b: Fraction) -> Fraction:
    d = (a - b) % 1
    return min(d, 1 - d)


def exact_member(point: SymbolicPoint, n: int, center: Sequence[Fraction], radius: RadiusLike, ndigits: int = 128) -> bool:
    """Exact test ||T^n(x) - y||_inf <= r_n on the torus, refining digits as needed."""
    while True:
        undecided = False
        for axis, y in enumerate(center):
            lo, w = coord_bounds(point, n, axis, ndigits)
            d = torus_distance(lo, y)
            d_hi = d + w
            d_lo = max(d - w, Fraction(0))
            if radius.contains(n, d_hi):
                continue
            if not radius.contains(n, d_lo):
                return False
            undecided = True
        if not undecided:
            return True
        ndigits *= 2


class OrbitWindows:
    """Full-width digit windows of an orbit segment, reusable across many ball queries."""

    def __init__(self, point: SymbolicPoint, start: int, count: int):
        self.point, self.start, self.count = point, start, count
        self.ns = np.arange(start, start + count)
        self.windows = [
            digit_windows(point.axis_digits(axis), base, start, count, window_width(base))
            for axis, base in enumerate(point.system.bases)
        ]


def ball_mask(
    point: SymbolicPoint,
    center: Sequence[Fraction],
    radius: RadiusLike,
    start: int,
    count: int,
    windows: OrbitWindows | None = None,
) -> np.ndarray:
    """Boolean mask over n in [start, start+count): is T^n(x) in the closed ball B(center, r_n)?"""
    system = point.system
    if windows is None or windows.start != start or windows.count != count:
        windows = OrbitWindows(point, start, count)
    ns = windows.ns
    inside = np.ones(count, dtype=bool)
    outside = np.zeros(count, dtype=bool)
    rf = radius.floats(ns)
    for axis, base in enumerate(system.bases):
        g = window_width(base)
        big = base**g
        w = windows.windows[axis]
        y_scaled = center[axis] * big
        yi = y_scaled.numerator // y_scaled.denominator
        t = np.mod(w - np.int64(yi), np.int64(big))
        du = np.minimum(t, big - t).astype(np.float64)
        r_units = rf * float(big)
        inside &= du + _GUARD_ABS <= r_units * (1 - _GUARD_REL)
        outside |= du - _GUARD_ABS > r_units * (1 + _GUARD_REL)
    undecided = ~inside & ~outside
    result = inside.copy()
    for i in np.flatnonzero(undecided):
        result[i] = exact_member(point, int(ns[i]), center, radius)
    return result


def first_hit(point: SymbolicPoint, center: Sequence[Fraction], radius: RadiusLike, start: int, stop: int) -> int | None:
    """Smallest n in [start, stop] with T^n(x) in the ball, scanning in growing chunks."""
    chunk = 1024
    n = start
    while n <= stop:
        count = min(chunk, stop - n + 1)
        mask = ball_mask(point, center, radius, n, count)
        idx = np.flatnonzero(mask)
        if idx.size:
            return n + int(idx[0])
        n += count
        chunk = min(chunk * 2, 1 << 20)
    return None


def cell_mask(point: SymbolicPoint, cells: Sequence, start: int, count: int) -> np.ndarray:
    """Mask over n in [start, start+count): does T^n(x) lie in one of the half-open adic cells?"""
    system = point.system
    mask = np.zeros(count, dtype=bool)
    cache: dict[tuple[int, int], np.ndarray] = {}
    for cell in cells:
        hit = np.ones(count, dtype=bool)
        for axis, base in enumerate(system.bases):
            g, k = cell.gens[axis], cell.indices[axis]
            if g == 0:
                continue
            key = (axis, g)
            if key not in cache:
                cache[key] = _wide_windows(point.axis_digits(axis), base, start, count, g)
            hit &= cache[key] == k
        mask |= hit
    return mask


def _wide_windows(digits: np.ndarray, base: int, start: int, count: int, width: int) -> np.ndarray:
    limit = window_width(base)
    if width <= limit:
        return digit_windows(digits, base, start, count, width)
    out = np.zeros(count, dtype=object)
    pos = 0
    while pos < width:
        step = min(limit, width - pos)
        part = digit_windows(digits, base, start + pos, count, step).astype(object)
        out = out * base**step + part
        pos += step
    return out
