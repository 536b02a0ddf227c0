"""Five-way tower performance classification.

Branches are evaluated in a fixed order and the first match wins:

1. samples and density both above their high thresholds
2. density above its high threshold
3. samples and density below their low thresholds, active longer than the
   long-activity threshold
4. wide range with near-zero samples
5. anything else
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

from celltriage.metrics import EnrichedTower
from celltriage.thresholds import ThresholdSet

STRATEGIC_RANGE_M = 1000
STRATEGIC_MAX_SAMPLES = 1


class TowerClass(str, Enum):
    OVER_UTILIZED_HIGH = "over_utilized_high_traffic_density"
    OVER_UTILIZED_CONGESTION = "over_utilized_localized_congestion"
    UNDER_UTILIZED = "under_utilized_inefficient"
    STRATEGIC_COVERAGE = "strategic_coverage"
    BALANCED = "balanced"

    @property
    def is_over_utilized(self) -> bool:
        return self in (TowerClass.OVER_UTILIZED_HIGH, TowerClass.OVER_UTILIZED_CONGESTION)


@dataclass
class ClassificationSummary:
    counts: dict[TowerClass, int] = field(default_factory=lambda: {c: 0 for c in TowerClass})

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {"counts": {c.value: n for c, n in self.counts.items()}, "total": self.total}


def decide(
    samples: float,
    density: float,
    active_days: float,
    range_m: float,
    T: ThresholdSet,
    strategic_range_m: float = STRATEGIC_RANGE_M,
    strategic_max_samples: float = STRATEGIC_MAX_SAMPLES,
) -> TowerClass:
    """Apply the decision chain to raw KPI values (towers or cluster aggregates)."""
    if samples > T.high_samples and density > T.high_density:
        return TowerClass.OVER_UTILIZED_HIGH
    if density > T.high_density:
        return TowerClass.OVER_UTILIZED_CONGESTION
    if samples < T.low_samples and density < T.low_density and active_days > T.long_active:
        return TowerClass.UNDER_UTILIZED
    if range_m >= strategic_range_m and samples <= strategic_max_samples:
        return TowerClass.STRATEGIC_COVERAGE
    return TowerClass.BALANCED


def classify_tower(
    t: EnrichedTower,
    T: ThresholdSet,
    strategic_range_m: float = STRATEGIC_RANGE_M,
    strategic_max_samples: float = STRATEGIC_MAX_SAMPLES,
) -> TowerClass:
    return decide(
        t.samples, t.signal_density, t.active_days, t.range_m, T, strategic_range_m, strategic_max_samples
    )


def classify_all(
    towers: Sequence[EnrichedTower],
    T: ThresholdSet,
    strategic_range_m: float = STRATEGIC_RANGE_M,
    strategic_max_samples: float = STRATEGIC_MAX_SAMPLES,
) -> tuple[list[tuple[EnrichedTower, TowerClass]], ClassificationSummary]:
    summary = ClassificationSummary()
    labeled = []
    for t in towers:
        label = classify_tower(t, T, strategic_range_m, strategic_max_samples)
        summary.counts[label] += 1
        labeled.append((t, label))
    return labeled, summary


def predicate_counts(towers: Sequence[EnrichedTower], T: ThresholdSet) -> dict[str, int]:
    """Raw counts of each threshold predicate, ignoring branch precedence."""
    return {
        "samples_above_high": sum(t.samples > T.high_samples for t in towers),
        "density_above_high": sum(t.signal_density > T.high_density for t in towers),
        "low_usage_long_active": sum(
            t.samples < T.low_samples and t.signal_density < T.low_density and t.active_days > T.long_active
            for t in towers
        ),
    }
