"""Monthly update series, phase comparison and data freshness."""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from datetime import datetime, timezone

from celltriage.errors import DomainError
from celltriage.ingest import SECONDS_PER_DAY, TowerRecord

Month = tuple[int, int]
MonthRange = tuple[Month, Month]

EARLY_PHASE: MonthRange = ((2023, 12), (2024, 5))
RECENT_PHASE: MonthRange = ((2024, 12), (2025, 5))


def _month_of(ts: int) -> Month:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    return d.year, d.month


def _next_month(m: Month) -> Month:
    y, mo = m
    return (y + 1, 1) if mo == 12 else (y, mo + 1)


def months_between(start: Month, end: Month) -> list[Month]:
    out = []
    m = start
    while m <= end:
        out.append(m)
        m = _next_month(m)
    return out


def parse_month_range(text: str) -> MonthRange:
    """Parse ``YYYY-MM..YYYY-MM`` (inclusive)."""
    match = re.fullmatch(r"\s*(\d{4})-(\d{1,2})\s*\.\.\s*(\d{4})-(\d{1,2})\s*", text)
    if not match:
        raise DomainError(f"month range must look like 2023-12..2024-05, got {text!r}")
    y1, m1, y2, m2 = map(int, match.groups())
    if not (1 <= m1 <= 12 and 1 <= m2 <= 12) or (y1, m1) > (y2, m2):
        raise DomainError(f"invalid month range {text!r}")
    return (y1, m1), (y2, m2)


def format_month_range(r: MonthRange) -> str:
    (y1, m1), (y2, m2) = r
    return f"{y1:04d}-{m1:02d}..{y2:04d}-{m2:02d}"


@dataclass(frozen=True)
class MonthlySeries:
    buckets: tuple[tuple[int, int, int], ...]

    @property
    def span(self) -> MonthRange:
        first, last = self.buckets[0], self.buckets[-1]
        return (first[0], first[1]), (last[0], last[1])

    def count(self, m: Month) -> int:
        for y, mo, c in self.buckets:
            if (y, mo) == m:
                return c
        return 0

    def to_rows(self) -> list[dict]:
        return [{"year": y, "month": m, "count": c} for y, m, c in self.buckets]


@dataclass(frozen=True)
class PhaseComparison:
    phase_a_mean: float
    phase_b_mean: float
    percent_change: float | None  # None when the first phase has no updates
    peak_month: Month
    peak_count: int

    def to_dict(self) -> dict:
        return {
            "phase_a_mean": self.phase_a_mean,
            "phase_b_mean": self.phase_b_mean,
            "percent_change": self.percent_change,
            "peak_month": {"year": self.peak_month[0], "month": self.peak_month[1]},
            "peak_count": self.peak_count,
        }


def monthly_counts(records: Sequence[TowerRecord]) -> MonthlySeries:
    """Bucket records by UTC calendar month of their last update, zero-filling gaps."""
    if not records:
        raise DomainError("no records to bucket")
    counts = Counter(_month_of(r.updated_ts) for r in records)
    months = months_between(min(counts), max(counts))
    return MonthlySeries(tuple((y, m, counts.get((y, m), 0)) for y, m in months))


def phase_compare(series: MonthlySeries, phase_a: MonthRange = EARLY_PHASE, phase_b: MonthRange = RECENT_PHASE) -> PhaseComparison:
    means = []
    for start, end in (phase_a, phase_b):
        months = months_between(start, end)
        if not months:
            raise DomainError(f"empty phase {start}..{end}")
        means.append(sum(series.count(m) for m in months) / len(months))
    a, b = means
    peak_y, peak_m, peak_c = max(series.buckets, key=lambda x: (x[2], -x[0], -x[1]))
    return PhaseComparison(
        phase_a_mean=a,
        phase_b_mean=b,
        percent_change=100.0 * (b - a) / a if a > 0 else None,
        peak_month=(peak_y, peak_m),
        peak_count=peak_c,
    )


def freshness(records: Sequence[TowerRecord], window_days: int = 365) -> float:
    """Share of records updated within ``window_days`` of the newest update."""
    if not records:
        raise DomainError("no records")
    if window_days <= 0:
        raise DomainError("window must be positive")
    cutoff = max(r.updated_ts for r in records) - window_days * SECONDS_PER_DAY
    return sum(r.updated_ts >= cutoff for r in records) / len(records)
