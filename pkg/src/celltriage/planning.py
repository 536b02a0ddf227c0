"""Capacity-planning views: coverage-only towers, LTE gaps, legacy demand
zones, cluster priorities, technology mix and the busiest-area baseline."""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass

from celltriage.classifier import STRATEGIC_MAX_SAMPLES, STRATEGIC_RANGE_M, TowerClass
from celltriage.errors import DomainError
from celltriage.ingest import Radio, TowerRecord
from celltriage.metrics import EnrichedTower
from celltriage.spatial import ClusterProfile, Gazetteer, reverse_geocode
from celltriage.thresholds import ThresholdSet

LEGACY = (Radio.GSM, Radio.UMTS)
ZONE_AGGREGATORS = ("max", "mean")


def high_range_low_usage(
    towers: Sequence[EnrichedTower],
    min_range_m: float = STRATEGIC_RANGE_M,
    max_samples: float = STRATEGIC_MAX_SAMPLES,
) -> list[EnrichedTower]:
    return [t for t in towers if t.range_m >= min_range_m and t.samples <= max_samples]


def geocode_towers(towers: Sequence[EnrichedTower], g: Gazetteer) -> list[str]:
    """Place name for every tower, in input order."""
    return [reverse_geocode(t.record.lat, t.record.lon, g)[0] for t in towers]


def lte_gap_locations(
    towers: Sequence[EnrichedTower], g: Gazetteer, places: Sequence[str] | None = None
) -> list[str]:
    """Places with at least one tower and no LTE tower, alphabetically."""
    if places is None:
        places = geocode_towers(towers, g)
    has_lte: dict[str, bool] = {}
    for t, place in zip(towers, places):
        has_lte[place] = has_lte.get(place, False) or t.record.radio is Radio.LTE
    return sorted(p for p, lte in has_lte.items() if not lte)


@dataclass(frozen=True)
class DemandZone:
    place: str
    admin: str
    legacy_tower_count: int
    max_legacy_density: float
    mean_legacy_density: float
    lte_present: bool
    lat: float
    lon: float

    def to_dict(self) -> dict:
        return {
            "place": self.place,
            "admin": self.admin,
            "legacy_tower_count": self.legacy_tower_count,
            "max_legacy_density": self.max_legacy_density,
            "mean_legacy_density": self.mean_legacy_density,
            "lte_present": self.lte_present,
            "lat": self.lat,
            "lon": self.lon,
        }


def non4g_demand_zones(
    towers: Sequence[EnrichedTower],
    T: ThresholdSet,
    g: Gazetteer,
    agg: str = "max",
    places: Sequence[str] | None = None,
) -> list[DemandZone]:
    """Places whose legacy (GSM/UMTS) towers show high signal density.

    A place qualifies when the ``agg`` (max or mean) of its legacy densities
    exceeds the high density threshold. Sorted by that score, descending,
    then by place name.
    """
    if agg not in ZONE_AGGREGATORS:
        raise DomainError(f"zone aggregator must be one of {ZONE_AGGREGATORS}, got {agg!r}")
    if places is None:
        places = geocode_towers(towers, g)
    legacy: dict[str, list[float]] = defaultdict(list)
    lte_places: set[str] = set()
    for t, place in zip(towers, places):
        if t.record.radio in LEGACY:
            legacy[place].append(t.signal_density)
        else:
            lte_places.add(place)
    scored = []
    for place, dens in legacy.items():
        mx, mean = max(dens), math.fsum(dens) / len(dens)
        score = mx if agg == "max" else mean
        if score > T.high_density:
            entry = g.by_name(place)
            zone = DemandZone(place, entry.admin, len(dens), mx, mean, place in lte_places, entry.lat, entry.lon)
            scored.append((score, zone))
    scored.sort(key=lambda sz: (-sz[0], sz[1].place))
    return [z for _, z in scored]


def priority_ranking(classified: Sequence[tuple[ClusterProfile, TowerClass]], n: int) -> list[ClusterProfile]:
    """Over-utilized clusters by total samples (descending), at most ``n``."""
    over = [p for p, label in classified if label.is_over_utilized]
    over.sort(key=lambda p: (-p.total_samples, p.cluster_id))
    return over[: max(n, 0)]


@dataclass(frozen=True)
class TechRow:
    radio: str
    count: int
    percentage: float
    mean_range_m: float | None


@dataclass(frozen=True)
class TechDistribution:
    rows: tuple[TechRow, ...]
    total: int
    total_mean_range_m: float

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"radio": r.radio, "count": r.count, "percentage": r.percentage, "mean_range_m": r.mean_range_m}
                for r in self.rows
            ],
            "total": {"count": self.total, "percentage": 100.0, "mean_range_m": self.total_mean_range_m},
        }


def tech_distribution(towers: Sequence[TowerRecord]) -> TechDistribution:
    if not towers:
        raise DomainError("no towers")
    by_radio: dict[Radio, list[int]] = {r: [] for r in Radio}
    for t in towers:
        by_radio[t.radio].append(t.range_m)
    n = len(towers)
    rows = tuple(
        TechRow(
            radio=radio.value,
            count=len(ranges),
            percentage=round(100.0 * len(ranges) / n, 1),
            mean_range_m=math.fsum(ranges) / len(ranges) if ranges else None,
        )
        for radio, ranges in by_radio.items()
    )
    return TechDistribution(rows, n, math.fsum(t.range_m for t in towers) / n)


@dataclass(frozen=True)
class BaselineResult:
    busiest_area: int
    area_total_samples: int
    top_cells: tuple[tuple[int, int], ...]

    def to_dict(self) -> dict:
        return {
            "busiest_area": self.busiest_area,
            "area_total_samples": self.area_total_samples,
            "top_cells": [{"cell": c, "samples": s} for c, s in self.top_cells],
        }


def netdatadrilling_baseline(towers: Sequence[TowerRecord], n_c: int = 10) -> BaselineResult:
    """Top ``n_c`` cells by samples inside the area with the most samples."""
    if not towers:
        raise DomainError("no towers")
    if n_c < 1:
        raise DomainError("n_c must be at least 1")
    totals: dict[int, int] = defaultdict(int)
    for t in towers:
        totals[t.area] += t.samples
    area = min(totals, key=lambda a: (-totals[a], a))
    cells = sorted(((t.cell, t.samples) for t in towers if t.area == area), key=lambda cs: (-cs[1], cs[0]))
    return BaselineResult(area, totals[area], tuple(cells[:n_c]))
