"""Radius sequences r_n and their critical exponent.

A sequence is one of four kinds:

* ``constant``: r_n = c;
* ``power``: r_n = c * n^-delta with rational c and delta (exact membership tests);
* ``explicit``: a finite list r_1, r_2, ... of rationals;
* ``generator``: a callable giving log r_n as a function of log n, which lets
  the critical exponent be probed at indices far beyond any stored orbit.

Index 0 is treated as an infinite radius wherever it appears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np


class RadiusSequence:
    def __init__(
        self,
        kind: str,
        *,
        scale: Fraction = Fraction(1),
        delta: Fraction | None = None,
        values: Sequence[Fraction] | None = None,
        log_radius: Callable[[float], float] | None = None,
        label: str = "",
    ):
        if kind not in ("constant", "power", "explicit", "generator"):
            raise ValueError(f"unknown radius kind {kind!r}")
        self.kind = kind
        self.scale = Fraction(scale)
        self.delta = None if delta is None else Fraction(delta)
        self.values = None if values is None else tuple(Fraction(v) for v in values)
        self._log_radius = log_radius
        self.label = label or kind
        if kind in ("constant", "power") and self.scale <= 0:
            raise ValueError("radius scale must be positive")
        if kind == "power" and (self.delta is None or self.delta < 0):
            raise ValueError("power-law exponent must be >= 0")
        if kind == "explicit":
            if not self.values:
                raise ValueError("explicit radius list is empty")
            if any(v < 0 for v in self.values):
                raise ValueError("radii must be nonnegative")
            if any(b > a for a, b in zip(self.values, self.values[1:])):
                raise ValueError("radius sequence is not nonincreasing")
        if kind == "generator" and log_radius is None:
            raise ValueError("generator kind needs a log_radius callable")

    @classmethod
    def constant(cls, c: Fraction | int | str) -> "RadiusSequence":
        return cls("constant", scale=Fraction(c), label=f"const {c}")

    @classmethod
    def power_law(cls, delta: Fraction | int | str, scale: Fraction | int | str = 1) -> "RadiusSequence":
        return cls("power", delta=Fraction(delta), scale=Fraction(scale), label=f"{scale}*n^-{delta}")

    @classmethod
    def explicit(cls, values: Sequence) -> "RadiusSequence":
        return cls("explicit", values=values)

    @classmethod
    def generator(cls, log_radius: Callable[[float], float], label: str = "generator") -> "RadiusSequence":
        return cls("generator", log_radius=log_radius, label=label)

    def scaled(self, factor: Fraction | int | str) -> "RadiusSequence":
        """The sequence factor * r_n."""
        factor = Fraction(factor)
        if self.kind in ("constant", "power"):
            return RadiusSequence(self.kind, scale=self.scale * factor, delta=self.delta, label=f"{factor}*({self.label})")
        if self.kind == "explicit":
            return RadiusSequence.explicit([v * factor for v in self.values])
        lf = math.log(factor)
        inner = self._log_radius
        return RadiusSequence.generator(lambda L: inner(L) + lf, f"{factor}*({self.label})")

    def __len__(self) -> int:
        return len(self.values) if self.kind == "explicit" else 2**63 - 1

    def __call__(self, n: int) -> Fraction | float:
        """r_n, exact for rational kinds (a float for generators and irrational powers)."""
        if n < 1:
            return math.inf
        if self.kind == "constant":
            return self.scale
        if self.kind == "power":
            if self.delta.denominator == 1:
                return self.scale / Fraction(n) ** self.delta.numerator
            return float(self.scale) * n ** -float(self.delta)
        if self.kind == "explicit":
            if n > len(self.values):
                raise IndexError(f"radius index {n} beyond the {len(self.values)} listed values")
            return self.values[n - 1]
        return math.exp(self._log_radius(math.log(n)))

    def log_radius(self, log_n: float) -> float:
        """log r_n as a function of log n (only defined for index growth, not for lists)."""
        if self.kind == "constant":
            return math.log(self.scale)
        if self.kind == "power":
            return math.log(self.scale) - float(self.delta) * log_n
        if self.kind == "generator":
            return self._log_radius(log_n)
        raise TypeError("explicit lists have no asymptotic log radius")

    def floats(self, ns: np.ndarray) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.float64)
        out = np.full(ns.shape, np.inf)
        pos = ns >= 1
        if self.kind == "constant":
            out[pos] = float(self.scale)
        elif self.kind == "power":
            out[pos] = float(self.scale) * ns[pos] ** -float(self.delta)
        elif self.kind == "explicit":
            vals = np.array([float(v) for v in self.values])
            idx = ns[pos].astype(np.int64) - 1
            if idx.size and idx.max() >= len(vals):
                raise IndexError("radius index beyond the listed values")
            out[pos] = vals[idx]
        else:
            out[pos] = np.exp([self._log_radius(math.log(v)) for v in ns[pos]])
        return out

    def compare(self, n: int, d: Fraction) -> int:
        """Sign of d - r_n: exact for rational kinds and rational-exponent powers, float for generators."""
        if n < 1:
            return -1
        if self.kind == "power" and d > 0:
            # (d / c)^q * n^p against 1 with delta = p/q
            p, q = self.delta.numerator, self.delta.denominator
            lhs = (d / self.scale) ** q * Fraction(n) ** p
            return (lhs > 1) - (lhs < 1)
        r = self(n)
        if isinstance(r, float):
            d = float(d)
        return (d > r) - (d < r)

    def contains(self, n: int, d: Fraction) -> bool:
        """d <= r_n."""
        return self.compare(n, d) <= 0

    def first_below(self, t: Fraction, limit: int = 2**62) -> int:
        """Smallest n >= 1 with r_n < t (``limit`` if none up to it)."""

        def below(n: int) -> bool:
            return not self.contains(n, Fraction(t))

        hi = 1
        while not below(hi):
            if hi >= limit:
                return limit
            hi = min(hi * 2, limit)
        lo = hi // 2
        if lo < 1 or below(lo):
            return 1 if below(1) else hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if below(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def check_monotone(self, upto: int = 10_000) -> bool:
        ns = np.arange(1, min(upto, len(self)) + 1)
        r = self.floats(ns)
        return bool(np.all(np.diff(r) <= 0))

    def describe(self) -> dict:
        out: dict = {"kind": self.kind, "label": self.label}
        if self.kind in ("constant", "power"):
            out["scale"] = f"{self.scale.numerator}/{self.scale.denominator}"
        if self.kind == "power":
            out["delta"] = f"{self.delta.numerator}/{self.delta.denominator}"
        return out


@dataclass(frozen=True)
class ExponentBracket:
    lower: float
    upper: float
    exact: Fraction | None = None

    @property
    def mid(self) -> float:
        return float(self.exact) if self.exact is not None else (self.lower + self.upper) / 2


def _condensed_log_term(radii: RadiusSequence, s: float, j: float) -> float:
    """log of the Cauchy-condensed term 2^j * r_{2^j}^s."""
    L = j * math.log(2)
    try:
        lr = radii.log_radius(L)
    except OverflowError:
        lr = -math.inf
    if lr == -math.inf:
        return -math.inf
    return L + s * lr


def series_converges(radii: RadiusSequence, s: float, j1: float = 1e7, j2: float = 2e7) -> bool:
    """Condensation test for sum r_n^s: the condensed terms must eventually decrease geometrically.

    For nonincreasing r_n, sum r_n^s < inf iff sum_j 2^j r_{2^j}^s < inf; the
    log of the condensed term is compared at two very large j.
    """
    if s <= 0:
        return False
    a = _condensed_log_term(radii, s, j1)
    b = _condensed_log_term(radii, s, j2)
    if b == -math.inf:
        return True
    return (b - a) / (j2 - j1) < 0 and b < 0


def critical_exponent(radii: RadiusSequence, tolerance: float = 1e-6, s_max: float = 1e6) -> ExponentBracket:
    """s_r = inf{s : sum_n r_n^s < inf}.

    Closed form 1/delta for power laws; bisection with the condensation test for
    generators; for explicit lists, the spread of log n / log(1/r_n) over the
    last half of the list (the exponent of convergence of a nonincreasing
    sequence is the limsup of that ratio).
    """
    if radii.kind == "constant":
        # a positive constant never makes the series converge
        return ExponentBracket(math.inf, math.inf)
    if radii.kind == "power":
        if radii.delta == 0:
            return ExponentBracket(math.inf, math.inf)
        s = 1 / radii.delta
        return ExponentBracket(float(s), float(s), s)
    if radii.kind == "explicit":
        vals = radii.values
        if all(v == 0 for v in vals):
            return ExponentBracket(0.0, 0.0, Fraction(0))
        ratios = []
        for n in range(max(2, len(vals) // 2), len(vals) + 1):
            v = vals[n - 1]
            if v == 0:
                ratios.append(0.0)
            elif v < 1:
                ratios.append(math.log(n) / -math.log(v))
        if not ratios:
            return ExponentBracket(math.inf, math.inf)
        return ExponentBracket(min(ratios), max(ratios))
    lo, hi = 0.0, 1.0
    while not series_converges(radii, hi):
        lo, hi = hi, hi * 2
        if hi > s_max:
            return ExponentBracket(lo, math.inf)
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if series_converges(radii, mid):
            hi = mid
        else:
            lo = mid
    return ExponentBracket(lo, hi)


def radii_from_config(spec: dict, path: str = "radii") -> RadiusSequence:
    from .system import ConfigError, parse_rational

    if not isinstance(spec, dict):
        raise ConfigError(path, "expected an object")
    kind = spec.get("kind")
    allowed = {"constant": {"kind", "value"}, "power": {"kind", "delta", "scale"}, "explicit": {"kind", "values"}}
    if kind not in allowed:
        raise ConfigError(f"{path}.kind", f"expected one of {sorted(allowed)}, got {kind!r}")
    for key in spec:
        if key not in allowed[kind]:
            raise ConfigError(f"{path}.{key}", "unknown key")
    try:
        if kind == "constant":
            return RadiusSequence.constant(parse_rational(spec.get("value"), f"{path}.value"))
        if kind == "power":
            return RadiusSequence.power_law(
                parse_rational(spec.get("delta"), f"{path}.delta"), parse_rational(spec.get("scale", 1), f"{path}.scale")
            )
        vals = spec.get("values")
        if not isinstance(vals, list):
            raise ConfigError(f"{path}.values", "expected a list")
        return RadiusSequence.explicit([parse_rational(v, f"{path}.values[{i}]") for i, v in enumerate(vals)])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None
