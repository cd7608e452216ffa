"""Expanding toral endomorphisms T_{m,n} and their symbolic points.

A system is a finite alphabet of digit pairs ``(i, j)`` (one digit per axis)
with a rational probability vector.  Points are finite digit prefixes, so the
map ``(x, y) -> (m x, n y) mod 1`` is a shift of the stored digits and every
orbit point is an exact rational.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np


class ConfigError(ValueError):
    """Invalid system or experiment description; ``path`` locates the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class BudgetError(RuntimeError):
    """A computation needs more stored digits or enumeration depth than allowed."""


def parse_rational(value: Any, path: str = "value") -> Fraction:
    """Read ``"a/b"`` strings, integers and decimal strings as exact fractions."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigError(path, f"expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(path, f"cannot parse rational {value!r}") from None
    if isinstance(value, float):
        raise ConfigError(path, f"floats are not exact; write {value!r} as an 'a/b' string")
    raise ConfigError(path, f"expected a rational, got {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, eq=False)
class ExpandingToralSystem:
    """Bases, digit alphabet and Bernoulli weights of a self-affine measure.

    ``alphabet[s]`` is the digit tuple of symbol ``s`` (length ``dim``) and
    ``probs[s]`` its weight.  For ``dim == 2`` axis 0 has base ``m`` and axis 1
    base ``n`` with ``m <= n``.
    """

    dim: int
    bases: tuple[int, ...]
    alphabet: tuple[tuple[int, ...], ...]
    probs: tuple[Fraction, ...]
    marginals: tuple[tuple[Fraction, ...], ...] = field(init=False, repr=False)
    digit_table: np.ndarray = field(init=False, repr=False)
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        marg = []
        for axis, base in enumerate(self.bases):
            q = [Fraction(0)] * base
            for sym, p in zip(self.alphabet, self.probs):
                q[sym[axis]] += p
            marg.append(tuple(q))
        object.__setattr__(self, "marginals", tuple(marg))
        table = np.array(self.alphabet, dtype=np.int64).reshape(len(self.alphabet), self.dim)
        table.setflags(write=False)
        object.__setattr__(self, "digit_table", table)
        cum = np.cumsum([float(p) for p in self.probs])
        cum[-1] = 1.0
        cum.setflags(write=False)
        object.__setattr__(self, "cumulative", cum)

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @property
    def m(self) -> int:
        return self.bases[0]

    @property
    def n(self) -> int:
        return self.bases[-1]

    @property
    def is_lebesgue(self) -> bool:
        """True when mu is Lebesgue measure on the torus (full grid, uniform weights)."""
        full = math.prod(self.bases)
        return self.size == full and all(p == Fraction(1, full) for p in self.probs)

    def symbol_index(self, digits: Sequence[int]) -> int:
        try:
            return self.alphabet.index(tuple(digits))
        except ValueError:
            raise KeyError(f"digit tuple {tuple(digits)} is not in the alphabet") from None

    def approx_split(self, k: int) -> int:
        """Largest l with n**l <= m**k, i.e. floor(k log m / log n) without rounding ambiguity."""
        if self.dim == 1:
            return k
        m, n = self.bases
        target = m**k
        l = int(k * math.log(m) / math.log(n))
        while n ** (l + 1) <= target:
            l += 1
        while l > 0 and n**l > target:
            l -= 1
        return l

    def describe(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "bases": list(self.bases),
            "alphabet": [list(a) for a in self.alphabet],
            "probs": [format_rational(p) for p in self.probs],
        }


def make_system(config: dict[str, Any], path: str = "system") -> ExpandingToralSystem:
    """Validate a system description (keys ``dim, bases, alphabet, probs``)."""
    if not isinstance(config, dict):
        raise ConfigError(path, "expected an object")
    allowed = {"dim", "bases", "alphabet", "probs", "seed", "name"}
    for key in config:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in ("dim", "bases", "alphabet", "probs"):
        if key not in config:
            raise ConfigError(f"{path}.{key}", "missing")

    dim = config["dim"]
    if dim not in (1, 2) or isinstance(dim, bool):
        raise ConfigError(f"{path}.dim", f"must be 1 or 2, got {dim!r}")
    bases = config["bases"]
    if isinstance(bases, int):
        bases = [bases]
    if not isinstance(bases, list) or len(bases) != dim:
        raise ConfigError(f"{path}.bases", f"expected {dim} integer base(s)")
    for a, b in enumerate(bases):
        if not isinstance(b, int) or isinstance(b, bool) or b < 2:
            raise ConfigError(f"{path}.bases[{a}]", f"base must be an integer >= 2, got {b!r}")
    if dim == 2 and bases[0] > bases[1]:
        raise ConfigError(f"{path}.bases", f"need m <= n, got m={bases[0]} > n={bases[1]}")

    raw_alpha = config["alphabet"]
    if not isinstance(raw_alpha, list) or not raw_alpha:
        raise ConfigError(f"{path}.alphabet", "expected a nonempty list")
    alphabet: list[tuple[int, ...]] = []
    for s, entry in enumerate(raw_alpha):
        epath = f"{path}.alphabet[{s}]"
        digits = [entry] if isinstance(entry, int) and not isinstance(entry, bool) else entry
        if not isinstance(digits, list) or len(digits) != dim:
            raise ConfigError(epath, f"expected {dim} digit(s), got {entry!r}")
        for axis, d in enumerate(digits):
            if not isinstance(d, int) or isinstance(d, bool) or not 0 <= d < bases[axis]:
                raise ConfigError(epath, f"digit {d!r} out of range for base {bases[axis]} on axis {axis}")
        tup = tuple(digits)
        if tup in alphabet:
            raise ConfigError(epath, f"duplicate alphabet entry {list(tup)}")
        alphabet.append(tup)

    raw_probs = config["probs"]
    if not isinstance(raw_probs, list) or len(raw_probs) != len(alphabet):
        raise ConfigError(f"{path}.probs", f"expected {len(alphabet)} weights")
    probs = [parse_rational(p, f"{path}.probs[{s}]") for s, p in enumerate(raw_probs)]
    for s, p in enumerate(probs):
        if not 0 <= p <= 1:
            raise ConfigError(f"{path}.probs[{s}]", f"weight {p} outside [0, 1]")
    total = sum(probs, Fraction(0))
    if total != 1:
        raise ConfigError(f"{path}.probs", f"weights sum to {total}, not 1")
    return ExpandingToralSystem(dim, tuple(bases), tuple(alphabet), tuple(probs))


def load_system(path: str | Path) -> ExpandingToralSystem:
    with open(path, encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"JSON parse error: {exc}") from None
    return make_system(config)


def doubling_map() -> ExpandingToralSystem:
    return make_system({"dim": 1, "bases": [2], "alphabet": [0, 1], "probs": ["1/2", "1/2"]})


def full_grid(m: int = 2, n: int = 3) -> ExpandingToralSystem:
    alphabet = [[i, j] for i in range(m) for j in range(n)]
    w = format_rational(Fraction(1, m * n))
    return make_system({"dim": 2, "bases": [m, n], "alphabet": alphabet, "probs": [w] * len(alphabet)})


def s3_carpet(probs: Sequence[str] = ("1/3", "1/3", "1/3")) -> ExpandingToralSystem:
    """The three-map (2,3) carpet with symbols (0,0), (1,1), (1,2)."""
    return make_system({"dim": 2, "bases": [2, 3], "alphabet": [[0, 0], [1, 1], [1, 2]], "probs": list(probs)})


# -- points ------------------------------------------------------------------


@dataclass(frozen=True)
class Word:
    """A finite sequence of alphabet indices."""

    symbols: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.symbols)

    def validate(self, system: ExpandingToralSystem) -> None:
        for s in self.symbols:
            if not 0 <= s < system.size:
                raise IndexError(f"symbol index {s} outside alphabet of size {system.size}")


@dataclass(frozen=True, eq=False)
class SymbolicPoint:
    """Finite digit prefix of a point of the attractor, shifted ``offset`` times."""

    system: ExpandingToralSystem
    digits: np.ndarray
    offset: int = 0

    def __post_init__(self) -> None:
        if self.offset < 0 or self.offset > len(self.digits):
            raise ValueError("offset outside the stored prefix")

    @property
    def usable(self) -> int:
        """Number of stored digits not yet consumed by shifts."""
        return len(self.digits) - self.offset

    def symbols(self) -> np.ndarray:
        return self.digits[self.offset:]

    def axis_digits(self, axis: int) -> np.ndarray:
        """Digit sequence of coordinate ``axis`` of the current point."""
        return self.system.digit_table[self.digits[self.offset:], axis]


def point_from_symbols(system: ExpandingToralSystem, symbols: Sequence[int]) -> SymbolicPoint:
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.ndim != 1 or (arr.size and (arr.min() < 0 or arr.max() >= system.size)):
        raise IndexError("symbol index outside alphabet")
    arr = arr.astype(_symbol_dtype(system))
    arr.setflags(write=False)
    return SymbolicPoint(system, arr)


def point_from_digits(system: ExpandingToralSystem, digits: Sequence[Sequence[int] | int]) -> SymbolicPoint:
    """Build a point from per-position digit tuples (plain ints allowed in dimension 1)."""
    syms = [system.symbol_index([d] if isinstance(d, (int, np.integer)) else d) for d in digits]
    return point_from_symbols(system, syms)


def _symbol_dtype(system: ExpandingToralSystem) -> np.dtype:
    return np.uint8 if system.size <= 256 else np.int32


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``; streams are independent."""
    key = np.array([seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_symbols(system: ExpandingToralSystem, rng: np.random.Generator, length: int) -> np.ndarray:
    u = rng.random(length)
    return np.searchsorted(system.cumulative, u, side="right").astype(_symbol_dtype(system))


def sample_point(system: ExpandingToralSystem, length: int, seed: int, index: int = 0) -> SymbolicPoint:
    """Draw ``length`` i.i.d. symbols from ``probs``; identical for identical ``(seed, index)``."""
    if length < 1:
        raise ValueError("length must be >= 1")
    syms = draw_symbols(system, rng_for(seed, index), length)
    syms.setflags(write=False)
    return SymbolicPoint(system, syms)


def shift(point: SymbolicPoint, k: int) -> SymbolicPoint:
    """Apply T^k: advance the offset, no copying."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > point.usable:
        raise BudgetError(f"cannot shift by {k}: only {point.usable} stored digits remain")
    return SymbolicPoint(point.system, point.digits, point.offset + k)


def digits_to_int(digits: np.ndarray, base: int) -> int:
    """Integer with the given most-significant-first digits (divide and conquer)."""
    n = len(digits)
    if n <= 64:
        num = 0
        for d in digits.tolist():
            num = num * base + d
        return num
    half = n // 2
    return digits_to_int(digits[:half], base) * base ** (n - half) + digits_to_int(digits[half:], base)


def embed(point: SymbolicPoint, max_digits: int | None = None) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Exact coordinates of the stored prefix and per-axis truncation error bounds.

    Returns ``(coords, errors)`` with ``coords[a] = sum_t d_t b_a^{-t}`` over the
    used digits and ``errors[a] = b_a^{-L}``, the width of the cell that
    contains every point sharing this prefix.
    """
    used = point.usable if max_digits is None else min(max_digits, point.usable)
    coords, errors = [], []
    for axis, base in enumerate(point.system.bases):
        digs = point.axis_digits(axis)[:used]
        num = digits_to_int(digs, base)
        coords.append(Fraction(num, base**used))
        errors.append(Fraction(1, base**used))
    return tuple(coords), tuple(errors)


# -- induced maps ------------------------------------------------------------


@dataclass(frozen=True)
class InducedOrbit:
    """Successive hitting times n_A^1 < n_A^2 < ... of a point in a cell union."""

    hits: tuple[int, ...]
    requested: int
    horizon: int
    truncated: bool

    def return_times(self) -> tuple[int, ...]:
        """n_A(T_A^i x) for i = 0, 1, ...: the gaps between successive hits."""
        prev, out = 0, []
        for h in self.hits:
            out.append(h - prev)
            prev = h
        return tuple(out)


def induced_orbit(point: SymbolicPoint, cells: Sequence[Any], count: int, horizon: int) -> InducedOrbit:
    """First ``count`` indices n >= 1 with T^n(x) in the union of ``cells``.

    ``cells`` are :class:`ergolab.measure.CellBox` objects.  Hits are searched
    up to ``horizon``; if fewer than ``count`` are found the result is flagged
    ``truncated`` rather than raising.
    """
    from .orbit import cell_mask

    if not cells:
        raise ValueError("target set must contain at least one cell")
    if horizon > point.usable:
        raise BudgetError(f"horizon {horizon} exceeds the {point.usable} stored digits")
    hits: list[int] = []
    start, chunk = 1, 4096
    while start <= horizon and len(hits) < count:
        stop = min(horizon, start + chunk - 1)
        mask = cell_mask(point, cells, start, stop - start + 1)
        found = np.flatnonzero(mask) + start
        hits.extend(found[: count - len(hits)].tolist())
        start = stop + 1
        chunk *= 2
    return InducedOrbit(tuple(hits), count, horizon, truncated=len(hits) < count)
