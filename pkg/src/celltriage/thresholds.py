"""Quantile-derived decision thresholds.

Quantiles use linear interpolation between order statistics at position
``(n - 1) * q`` (Hyndman-Fan type 7, the default in R and numpy).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass

from celltriage.errors import DomainError
from celltriage.metrics import EnrichedTower


@dataclass(frozen=True)
class QuantileConfig:
    q_high: float = 0.90
    q_low: float = 0.10
    q_long: float = 0.75

    def __post_init__(self) -> None:
        if not 0.0 < self.q_high <= 1.0:
            raise DomainError(f"q_high must lie in (0, 1], got {self.q_high}")
        if not 0.0 <= self.q_low < 1.0:
            raise DomainError(f"q_low must lie in [0, 1), got {self.q_low}")
        if not 0.0 < self.q_long <= 1.0:
            raise DomainError(f"q_long must lie in (0, 1], got {self.q_long}")
        if self.q_low >= self.q_high:
            raise DomainError("q_low must be below q_high")


@dataclass(frozen=True)
class ThresholdSet:
    high_samples: float
    low_samples: float
    high_density: float
    low_density: float
    long_active: float

    def __post_init__(self) -> None:
        values = asdict(self).values()
        if any(math.isnan(v) or v < 0 for v in values):
            raise DomainError("thresholds must be non-negative numbers")
        if self.high_samples < self.low_samples or self.high_density < self.low_density:
            raise DomainError("high thresholds must not be below low thresholds")

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def quantile_sorted(xs: Sequence[float], q: float) -> float:
    """Type-7 quantile of already sorted values."""
    h = (len(xs) - 1) * q
    lo = math.floor(h)
    frac = h - lo
    if frac == 0.0 or lo + 1 >= len(xs):
        return float(xs[lo])
    return xs[lo] + frac * (xs[lo + 1] - xs[lo])


def quantile(values: Sequence[float], q: float) -> float:
    if len(values) == 0:
        raise DomainError("quantile of an empty sequence")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile level must lie in [0, 1], got {q}")
    return quantile_sorted(sorted(values), q)


def thresholds_from_values(
    samples: Sequence[float],
    densities: Sequence[float],
    days: Sequence[float],
    config: QuantileConfig = QuantileConfig(),
) -> ThresholdSet:
    if not samples:
        raise DomainError("cannot derive thresholds from an empty dataset")
    s, d = sorted(samples), sorted(densities)
    return ThresholdSet(
        high_samples=quantile_sorted(s, config.q_high),
        low_samples=quantile_sorted(s, config.q_low),
        high_density=quantile_sorted(d, config.q_high),
        low_density=quantile_sorted(d, config.q_low),
        long_active=quantile(days, config.q_long),
    )


def compute_thresholds(towers: Sequence[EnrichedTower], config: QuantileConfig = QuantileConfig()) -> ThresholdSet:
    """One global threshold set over every enriched tower."""
    if not towers:
        raise DomainError("cannot derive thresholds from an empty dataset")
    return thresholds_from_values(
        [t.samples for t in towers],
        [t.signal_density for t in towers],
        [t.active_days for t in towers],
        config,
    )
