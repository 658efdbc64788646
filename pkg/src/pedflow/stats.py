"""Replication-ensemble statistics: streaming mean/variance, t intervals, Welch comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from scipy import stats as _sps


def average_traversal(g, ptype: str) -> float:
    """``total_P / count_P`` of a global store, or 0 before the first completion."""
    n = g.count(ptype)
    return g.total(ptype) / n if n else 0.0


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    variance: float
    half_width: float

    @property
    def flagged(self) -> bool:
        """True when the half-width is not finite (fewer than two replications)."""
        return not math.isfinite(self.half_width)

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n)


def t_quantile(p: float, df: float) -> float:
    """Student-t quantile (inverse regularized incomplete beta under the hood)."""
    return float(_sps.t.ppf(p, df))


def aggregate(values: Iterable[float], confidence: float = 0.95) -> SummaryStats:
    """Single-pass Welford mean and sample variance with a Student-t half-width.

    A single value yields variance 0 and an infinite (flagged) half-width.
    """
    n = 0
    mean = 0.0
    m2 = 0.0
    for x in values:
        n += 1
        delta = x - mean
        mean += delta / n
        m2 += delta * (x - mean)
    if n == 0:
        raise ValueError("aggregate needs at least one value")
    if n == 1:
        return SummaryStats(1, mean, 0.0, math.inf)
    variance = max(m2 / (n - 1), 0.0)
    q = t_quantile(0.5 + confidence / 2.0, n - 1)
    return SummaryStats(n, mean, variance, q * math.sqrt(variance / n))


@dataclass(frozen=True)
class Verdict:
    relation: str  # "<", "=" or ">"
    p_value: float

    def __str__(self):
        return f"{self.relation} (p={self.p_value:.3g})"


def compare_means(a: SummaryStats, b: SummaryStats, alpha: float = 0.05) -> Verdict:
    """Welch's unequal-variance t-test; ``=`` means indistinguishable at ``alpha``."""
    if a.n < 2 or b.n < 2:
        raise ValueError("Welch test needs at least two replications per side")
    if a.variance == 0.0 and b.variance == 0.0:
        if a.mean == b.mean:
            return Verdict("=", 1.0)
        return Verdict("<" if a.mean < b.mean else ">", 0.0)
    res = _sps.ttest_ind_from_stats(a.mean, math.sqrt(a.variance), a.n,
                                    b.mean, math.sqrt(b.variance), b.n, equal_var=False)
    p = float(res.pvalue)
    if p < alpha:
        return Verdict("<" if a.mean < b.mean else ">", p)
    return Verdict("=", p)
