"""Rank-based and parametric significance tests.

Test statistics are computed here; only the regularized incomplete
gamma/beta functions behind the chi-square and Student-t tails come from
``scipy.special``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum

from scipy.special import betainc, gammaincc

from celltriage.errors import DomainError


class Method(str, Enum):
    KRUSKAL_WALLIS = "KruskalWallis"
    MANN_WHITNEY_U = "MannWhitneyU"
    PEARSON_R = "PearsonR"
    POOLED_T = "PooledT"
    WELCH_T = "WelchT"


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    method: Method
    statistic: float
    p_value: float
    df: float | None = None
    z: float | None = None

    def to_dict(self, p_adjusted: float | None = None) -> dict:
        out = {"method": self.method.value, "statistic": self.statistic, "df": self.df, "p_value": self.p_value}
        if p_adjusted is not None:
            out["p_adjusted"] = p_adjusted
        return out


def _clip_p(p: float) -> float:
    return min(1.0, max(0.0, float(p)))


def chi2_sf(x: float, df: float) -> float:
    if x <= 0:
        return 1.0
    return _clip_p(gammaincc(df / 2.0, x / 2.0))


def t_two_sided_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return _clip_p(betainc(df / 2.0, 0.5, df / (df + t * t)))


def normal_two_sided_p(z: float) -> float:
    return _clip_p(math.erfc(abs(z) / math.sqrt(2.0)))


def rankdata(values: Sequence[float]) -> list[float]:
    """1-based ranks, tied values sharing their mean rank."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for m in range(i, j + 1):
            ranks[order[m]] = mid
        i = j + 1
    return ranks


def _tie_sizes(values: Sequence[float]) -> list[int]:
    return [len(list(g)) for _, g in itertools.groupby(sorted(values))]


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    if len(groups) < 2:
        raise DomainError("Kruskal-Wallis needs at least two groups")
    if any(len(g) == 0 for g in groups):
        raise DomainError("Kruskal-Wallis groups must be non-empty")
    pooled = [float(x) for g in groups for x in g]
    n = len(pooled)
    if n < 3:
        raise DomainError("Kruskal-Wallis needs at least three observations")
    df = len(groups) - 1
    correction = 1.0 - sum(t**3 - t for t in _tie_sizes(pooled)) / (n**3 - n)
    if correction <= 0.0:
        return TestResult(Method.KRUSKAL_WALLIS, 0.0, 1.0, df)
    ranks = rankdata(pooled)
    acc, start = 0.0, 0
    for g in groups:
        r = math.fsum(ranks[start : start + len(g)])
        acc += r * r / len(g)
        start += len(g)
    h = (12.0 / (n * (n + 1)) * acc - 3.0 * (n + 1)) / correction
    h = max(h, 0.0)
    return TestResult(Method.KRUSKAL_WALLIS, h, chi2_sf(h, df), df)


def mann_whitney_u(a: Sequence[float], b: Sequence[float], continuity: bool = True) -> TestResult:
    """Two-sided Mann-Whitney U with the normal approximation.

    The reported statistic is ``min(U_a, U_b)``; ``z`` is the standardized
    ``U_a``, signed, with the continuity correction applied when requested.
    """
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise DomainError("Mann-Whitney U needs two non-empty samples")
    pooled = [float(x) for x in a] + [float(x) for x in b]
    n = na + nb
    ranks = rankdata(pooled)
    u_a = math.fsum(ranks[:na]) - na * (na + 1) / 2.0
    u = min(u_a, na * nb - u_a)
    mu = na * nb / 2.0
    ties = math.fsum(t**3 - t for t in _tie_sizes(pooled))
    var = na * nb / 12.0 * ((n + 1) - ties / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0.0:
        return TestResult(Method.MANN_WHITNEY_U, u, 1.0, z=0.0)
    diff = u_a - mu
    if continuity:
        diff = math.copysign(max(abs(diff) - 0.5, 0.0), diff)
    z = diff / math.sqrt(var)
    return TestResult(Method.MANN_WHITNEY_U, u, normal_two_sided_p(z), z=z)


def bonferroni(p_values: Sequence[float]) -> list[float]:
    m = len(p_values)
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p-value {p} outside [0, 1]")
    return [min(1.0, p * m) for p in p_values]


def pearson(x: Sequence[float], y: Sequence[float]) -> TestResult:
    n = len(x)
    if n != len(y):
        raise DomainError("x and y differ in length")
    if n < 3:
        raise DomainError("Pearson correlation needs at least three pairs")
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0.0 or syy == 0.0:
        raise DomainError("Pearson correlation is undefined for a constant variable")
    r = math.fsum(u * v for u, v in zip(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        p = t_two_sided_p(r * math.sqrt(df / (1.0 - r * r)), df)
    return TestResult(Method.PEARSON_R, r, p, df)


def _mean_var(xs: Sequence[float]) -> tuple[float, float]:
    m = math.fsum(xs) / len(xs)
    return m, math.fsum((v - m) ** 2 for v in xs) / (len(xs) - 1)


def pooled_t_test(a: Sequence[float], b: Sequence[float], welch: bool = False) -> TestResult:
    """Two-sample t-test; Student's pooled variance unless ``welch`` is set."""
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise DomainError("t-test needs at least two observations per group")
    ma, va = _mean_var(a)
    mb, vb = _mean_var(b)
    if welch:
        se2 = va / na + vb / nb
        method = Method.WELCH_T
        df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)) if se2 > 0 else na + nb - 2
    else:
        df = na + nb - 2
        sp2 = ((na - 1) * va + (nb - 1) * vb) / df
        se2 = sp2 * (1.0 / na + 1.0 / nb)
        method = Method.POOLED_T
    if se2 == 0.0:
        if ma == mb:
            return TestResult(method, 0.0, 1.0, df)
        raise DomainError("degenerate t-test: zero variance in both groups with unequal means")
    t = (ma - mb) / math.sqrt(se2)
    return TestResult(method, t, t_two_sided_p(t, df), df)


def pairwise_mann_whitney(groups: Mapping[str, Sequence[float]], continuity: bool = True) -> list[dict]:
    """All pairwise comparisons in key order, Bonferroni-adjusted together."""
    pairs = list(itertools.combinations(list(groups), 2))
    results = [mann_whitney_u(groups[x], groups[y], continuity) for x, y in pairs]
    adjusted = bonferroni([r.p_value for r in results])
    return [
        {"a": x, "b": y, **r.to_dict(p_adj)} for (x, y), r, p_adj in zip(pairs, results, adjusted)
    ]
