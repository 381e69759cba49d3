"""Rank statistics and non-parametric tests, in plain Python.

Covers tie-aware ranking, Spearman's rho, the Friedman test, the Wilcoxon
signed-rank test and the chi-square survival function they rely on.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

EXACT_WILCOXON_MAX_N = 20


class StatsError(ValueError):
    pass


class DegenerateInput(StatsError):
    pass


class TooFewTreatments(StatsError):
    pass


class TooFewBlocks(StatsError):
    pass


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: int
    method: str  # "exact" or "approximate"
    all_zero: bool = False

    __test__ = False  # keep pytest from collecting this class

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def rank_with_ties(values: Sequence[float]) -> list[float]:
    """Ascending 1-based ranks; tied values share the mean of their ranks."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = r
        i = j + 1
    return ranks


def _tie_term(values) -> int:
    return sum(t ** 3 - t for t in Counter(values).values())


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    n = len(a)
    ma = math.fsum(a) / n
    mb = math.fsum(b) / n
    da = [x - ma for x in a]
    db = [y - mb for y in b]
    sxx = math.fsum(x * x for x in da)
    syy = math.fsum(y * y for y in db)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("zero variance")
    r = math.fsum(x * y for x, y in zip(da, db)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman_rho(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise StatsError("samples differ in length")
    if len(a) < 3:
        raise DegenerateInput("Spearman needs at least 3 pairs")
    return pearson(rank_with_ties(a), rank_with_ties(b))


def _gamma_p_series(a: float, x: float) -> float:
    # lower regularized P(a, x) by series; valid for x < a + 1
    term = total = 1.0 / a
    ap = a
    for _ in range(10000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # upper regularized Q(a, x) by modified Lentz continued fraction; x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    if a <= 0:
        raise StatsError("a must be positive")
    if x < 0:
        raise StatsError("x must be non-negative")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_p_series(a, x))
    return min(1.0, _gamma_cf(a, x))


def chi_square_sf(x: float, df: float) -> float:
    if x <= 0:
        return 1.0
    return gamma_q(df / 2.0, x / 2.0)


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def friedman_test(scores: Sequence[Sequence[float]]) -> TestResult:
    """Friedman test; rows are blocks, columns are treatments.

    Ranks are taken within each block, ties averaged, and the statistic is
    divided by the usual tie correction factor.
    """
    n = len(scores)
    if n < 2:
        raise TooFewBlocks(f"need at least 2 blocks, got {n}")
    k = len(scores[0])
    if any(len(row) != k for row in scores):
        raise StatsError("blocks differ in number of treatments")
    if k < 3:
        raise TooFewTreatments(f"need at least 3 treatments, got {k}")
    rank_sums = [0.0] * k
    ties = 0
    for row in scores:
        for j, r in enumerate(rank_with_ties(row)):
            rank_sums[j] += r
        ties += _tie_term(row)
    centre = (k + 1) / 2
    ss = math.fsum((s / n - centre) ** 2 for s in rank_sums)
    correction = 1.0 - ties / (n * k * (k * k - 1))
    if correction <= 1e-12:
        return TestResult(0.0, 1.0, n, "approximate")
    stat = 12.0 * n / (k * (k + 1)) * ss / correction
    return TestResult(stat, chi_square_sf(stat, k - 1), n, "approximate")


def _signed_rank_counts(doubled_ranks: Sequence[int]) -> list[int]:
    # number of sign assignments giving each value of the (doubled) positive rank sum
    counts = [1]
    for r in doubled_ranks:
        nxt = counts + [0] * r
        for s, c in enumerate(counts):
            if c:
                nxt[s + r] += c
        counts = nxt
    return counts


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float] | None = None) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on paired samples (or on differences ``x``).

    Zero differences are dropped.  With at most 20 non-zero differences the
    p-value is exact, counting every sign assignment of the tied ranks;
    above that a normal approximation with tie and continuity corrections is
    used.  The statistic is ``min(W+, W-)``.
    """
    diffs = list(x) if y is None else [a - b for a, b in zip(x, y, strict=True)]
    d = [v for v in diffs if v != 0]
    n = len(d)
    if n == 0:
        return TestResult(0.0, 1.0, 0, "exact", all_zero=True)
    ranks = rank_with_ties([abs(v) for v in d])
    w_plus = math.fsum(r for r, v in zip(ranks, d) if v > 0)
    total = n * (n + 1) / 2
    w = min(w_plus, total - w_plus)
    if n <= EXACT_WILCOXON_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _signed_rank_counts(doubled)
        t2 = sum(doubled)
        lo = int(round(2 * w))
        # extreme when min(s, t2 - s) <= observed
        extreme = sum(c for s, c in enumerate(counts) if min(s, t2 - s) <= lo)
        return TestResult(w, min(1.0, extreme / 2 ** n), n, "exact")
    mean = total / 2
    var = n * (n + 1) * (2 * n + 1) / 24 - _tie_term([abs(v) for v in d]) / 48
    if var <= 0:
        return TestResult(w, 1.0, n, "approximate")
    z = max(0.0, abs(w - mean) - 0.5) / math.sqrt(var)
    return TestResult(w, min(1.0, 2 * normal_sf(z)), n, "approximate")
