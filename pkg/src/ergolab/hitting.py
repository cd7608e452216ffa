"""Hitting times tau_r(x, y) = inf{n >= 0 : T^n x in B(y, r)} and their scaling.

For mu-typical pairs, log tau_r / -log mu(B(y, r)) should approach 1 as
r = 2^-k shrinks.  Each scale is scanned up to the waiting-time horizon
N_r = floor(mu(B(y, r))^-(1+eps)) + 1, beyond which a miss is reported as
not-found (censored) rather than searched for indefinitely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Sequence

import numpy as np

from .measure import MeasureInterval, ball_measure
from .orbit import ConstantRadius, first_hit, window_width
from .parallel import pmap
from .system import BudgetError, ExpandingToralSystem, SymbolicPoint, embed, sample_point

Y_DIGITS = 128


def _center(y: SymbolicPoint | Sequence) -> tuple[Fraction, ...]:
    if isinstance(y, SymbolicPoint):
        return embed(y)[0]
    return tuple(Fraction(c) for c in y)


def hitting_time(x: SymbolicPoint, y: SymbolicPoint | Sequence, r: Fraction | int | str, horizon: int) -> int | None:
    """Smallest n in [0, horizon] with ||T^n x - y||_inf <= r on the torus, or None."""
    r = Fraction(r)
    if r <= 0:
        raise ValueError("radius must be positive")
    if horizon > x.usable:
        raise BudgetError(f"horizon {horizon} exceeds the {x.usable} stored digits of x")
    return first_hit(x, _center(y), ConstantRadius(r), 0, horizon)


@dataclass(frozen=True)
class HittingRecord:
    k: int
    radius: Fraction
    tau: int | None
    horizon: int
    mu: MeasureInterval
    truncated: bool

    @property
    def ratio(self) -> float | None:
        """log tau / -log mu(B(y, r)) at the bracket midpoint; None when tau < 1 or not found."""
        mid = self.mu.mid()
        if self.tau is None or self.tau < 1 or mid <= 0 or mid >= 1:
            return None
        return math.log(self.tau) / -math.log(mid)


def schedule_horizon(mu_upper: Fraction, eps: float) -> int:
    """N_r = floor(mu^-(1+eps)) + 1 evaluated at the upper measure bound."""
    if mu_upper <= 0:
        raise ValueError("target ball has zero measure")
    log_mu = math.log(mu_upper.numerator) - math.log(mu_upper.denominator)
    return math.floor(math.exp(-(1 + eps) * log_mu)) + 1


def _depth_for(system: ExpandingToralSystem, k: int) -> int:
    return math.ceil(k * math.log(2) / math.log(system.m)) + 16


def target_measures(system: ExpandingToralSystem, y: SymbolicPoint | Sequence, ks: Sequence[int]) -> list[MeasureInterval]:
    center = _center(y)
    return [ball_measure(system, center, Fraction(1, 2**k), _depth_for(system, k)) for k in ks]


def hitting_ratio_profile(
    x: SymbolicPoint,
    y: SymbolicPoint | Sequence,
    ks: Sequence[int],
    eps: float = 0.1,
    measures: Sequence[MeasureInterval] | None = None,
) -> list[HittingRecord]:
    """One record per scale r = 2^-k, each scanned up to its N_r horizon."""
    system = x.system
    if measures is None:
        measures = target_measures(system, y, ks)
    center = _center(y)
    out = []
    for k, mu in zip(ks, measures):
        r = Fraction(1, 2**k)
        horizon = schedule_horizon(mu.upper, eps)
        truncated = horizon > x.usable
        tau = first_hit(x, center, ConstantRadius(r), 0, min(horizon, x.usable))
        out.append(HittingRecord(k, r, tau, horizon, mu, truncated and tau is None))
    return out


def sample_pair(system: ExpandingToralSystem, ks: Sequence[int], eps: float, seed: int, index: int):
    """Pair ``index``: y from stream 2i, then x from stream 2i+1 long enough for every horizon."""
    y = sample_point(system, Y_DIGITS, seed, 2 * index)
    measures = target_measures(system, y, ks)
    longest = max(schedule_horizon(mu.upper, eps) for mu in measures)
    x = sample_point(system, longest + window_width(system.n) + 1, seed, 2 * index + 1)
    return x, y, measures


def _profile_task(args, system: ExpandingToralSystem, ks: tuple[int, ...], eps: float) -> list[HittingRecord]:
    seed, index = args
    x, y, measures = sample_pair(system, ks, eps, seed, index)
    return hitting_ratio_profile(x, y, ks, eps, measures)


def _quantiles(vals: np.ndarray) -> tuple[float, float, float]:
    if vals.size == 0:
        return (math.nan, math.nan, math.nan)
    q = np.quantile(vals, [0.25, 0.5, 0.75], method="inverted_cdf")
    return float(q[0]), float(q[1]), float(q[2])


@dataclass(frozen=True)
class SweepResult:
    records: list[list[HittingRecord]]
    rows: list[dict]

    def row(self, k: int | str) -> dict:
        return next(r for r in self.rows if r["k"] == k)


def _summary(label, recs: list[HittingRecord]) -> dict:
    # misses are censored above every observed ratio
    vals = np.array([r.ratio if r.tau is not None else math.inf for r in recs if r.tau is None or r.ratio is not None])
    q25, med, q75 = _quantiles(vals)
    return {
        "k": label,
        "pairs": len(recs),
        "found": sum(r.tau is not None for r in recs),
        "undefined": sum(r.tau is not None and r.ratio is None for r in recs),
        "q25": q25,
        "median": med,
        "q75": q75,
        "max_bracket_width": max(float(r.mu.width) for r in recs),
    }


def sweep_hitting(
    system: ExpandingToralSystem, num_pairs: int, ks: Sequence[int], seed: int = 0, eps: float = 0.1, jobs: int = 1
) -> SweepResult:
    """Ratio quantiles per scale (plus a row pooling all scales) over seeded (x, y) pairs."""
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    ks = tuple(ks)
    task = partial(_profile_task, system=system, ks=ks, eps=eps)
    records = pmap(task, [(seed, i) for i in range(num_pairs)], jobs)
    rows = [_summary(k, [rec[j] for rec in records]) for j, k in enumerate(ks)]
    rows.append(_summary("all", [r for rec in records for r in rec]))
    return SweepResult(records, rows)
