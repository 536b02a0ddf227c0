"""Per-tower derived metrics: signal density and active days."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from celltriage.errors import DomainError
from celltriage.ingest import SECONDS_PER_DAY, TowerRecord


@dataclass(frozen=True)
class EnrichedTower:
    record: TowerRecord
    signal_density: float
    active_days: int

    # shorthands used throughout the decision logic
    @property
    def samples(self) -> int:
        return self.record.samples

    @property
    def range_m(self) -> int:
        return self.record.range_m


def signal_density(samples: int, range_m: float) -> float:
    """Samples per meter of coverage radius."""
    if range_m <= 0:
        raise DomainError(f"range must be positive, got {range_m}")
    return samples / range_m


def active_days(created_ts: int, updated_ts: int) -> int:
    """Whole days elapsed between first and last observation."""
    if updated_ts < created_ts:
        raise DomainError(f"updated ({updated_ts}) precedes created ({created_ts})")
    return (updated_ts - created_ts) // SECONDS_PER_DAY


def enrich(records: Iterable[TowerRecord]) -> list[EnrichedTower]:
    return [
        EnrichedTower(
            record=r,
            signal_density=signal_density(r.samples, r.range_m),
            active_days=active_days(r.created_ts, r.updated_ts),
        )
        for r in records
    ]
