"""Report assembly, canonical JSON, and figure-ready data series."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

from celltriage.classifier import ClassificationSummary, TowerClass
from celltriage.errors import ConsistencyError, DomainError
from celltriage.ingest import Radio, TowerRecord, ValidationReport
from celltriage.metrics import EnrichedTower
from celltriage.planning import BaselineResult, DemandZone, TechDistribution
from celltriage.spatial import ClusterProfile, Clustering
from celltriage.temporal import MonthlySeries, PhaseComparison
from celltriage.thresholds import ThresholdSet, quantile_sorted

FIGURES = (1, 2, 3, 4, 5, 6)
SIGNIFICANT_DIGITS = 6


@dataclass
class ClusterStage:
    clustering: Clustering
    thresholds: ThresholdSet
    labels: list[TowerClass]
    priority: list[ClusterProfile]
    k: int
    seed: int

    def classified(self) -> list[tuple[ClusterProfile, TowerClass]]:
        return list(zip(self.clustering.profiles, self.labels))


@dataclass
class TemporalStage:
    series: MonthlySeries
    comparison: PhaseComparison
    phase_a: str
    phase_b: str
    window_days: int
    freshness: float


@dataclass
class ZoneStage:
    high_range_low_usage: list[int]  # indices into the accepted records
    demand_zones: list[DemandZone]
    lte_gaps: list[str]
    zone_agg: str


@dataclass
class AnalysisReport:
    config: dict
    dataset: dict
    validation: ValidationReport
    thresholds: ThresholdSet | None
    towers: list[EnrichedTower]
    labels: list[TowerClass]
    summary: ClassificationSummary | None
    predicate_counts: dict[str, int]
    clusters: ClusterStage | None = None
    statistics: dict | None = None
    tech: TechDistribution | None = None
    temporal: TemporalStage | None = None
    zones: ZoneStage | None = None
    baseline: BaselineResult | None = None
    sections: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"config": self.config}
        for name in self.sections:
            out[name] = SECTION_BUILDERS[name](self)
        return out

    def to_json(self) -> str:
        return dumps(self.to_dict())


# --------------------------------------------------------------------------
# canonical serialization


def canonical(value: Any) -> Any:
    """Round derived reals to 6 significant digits; leave integers exact."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, Mapping):
        return {str(k): canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical(v) for v in value]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def rows_to_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in canonical(dict(row)).items()})
    return buf.getvalue()


# --------------------------------------------------------------------------
# sections


def dataset_summary(records: Sequence[TowerRecord], validation: ValidationReport) -> dict:
    out = {
        "accepted": validation.accepted_count,
        "quarantined": len(validation.quarantined),
        "total_rows": validation.total,
        "span_days": None,
        "distinct_mcc": len({r.mcc for r in records}),
        "mcc_values": sorted({r.mcc for r in records}),
        "distinct_net": len({(r.mcc, r.net) for r in records}),
        "distinct_area": len({(r.mcc, r.net, r.area) for r in records}),
    }
    if records:
        span = max(r.updated_ts for r in records) - min(r.created_ts for r in records)
        out["span_days"] = span // 86400
    return out


def _tower_rows(rep: AnalysisReport) -> list[dict]:
    return [
        {
            "index": i,
            "radio": t.record.radio.value,
            "mcc": t.record.mcc,
            "net": t.record.net,
            "area": t.record.area,
            "cell": t.record.cell,
            "lat": t.record.lat,
            "lon": t.record.lon,
            "samples": t.samples,
            "range_m": t.range_m,
            "signal_density": t.signal_density,
            "active_days": t.active_days,
            "label": label.value,
        }
        for i, (t, label) in enumerate(zip(rep.towers, rep.labels))
    ]


def _classification(rep: AnalysisReport) -> dict:
    return {
        "summary": rep.summary.to_dict(),
        "predicate_counts": rep.predicate_counts,
        "towers": _tower_rows(rep),
    }


def _clusters(rep: AnalysisReport) -> dict:
    cs = rep.clusters
    counts = {c.value: 0 for c in TowerClass}
    for label in cs.labels:
        counts[label.value] += 1
    return {
        "k": cs.k,
        "seed": cs.seed,
        "thresholds": cs.thresholds.to_dict(),
        "profiles": [{**p.to_dict(), "label": lab.value} for p, lab in cs.classified()],
        "summary": {"counts": counts, "total": len(cs.labels)},
        "assignment": cs.clustering.assignment,
        "priority_ranking": [
            {"rank": i + 1, "cluster_id": p.cluster_id, "total_samples": p.total_samples}
            for i, p in enumerate(cs.priority)
        ],
    }


def _temporal(rep: AnalysisReport) -> dict:
    tm = rep.temporal
    return {
        "series": tm.series.to_rows(),
        "phase_a": tm.phase_a,
        "phase_b": tm.phase_b,
        "comparison": tm.comparison.to_dict(),
        "freshness": {"window_days": tm.window_days, "fraction": tm.freshness},
    }


def _zones(rep: AnalysisReport) -> dict:
    z = rep.zones
    return {
        "high_range_low_usage": {"count": len(z.high_range_low_usage), "towers": z.high_range_low_usage},
        "zone_agg": z.zone_agg,
        "demand_zones": [d.to_dict() for d in z.demand_zones],
        "lte_gaps": z.lte_gaps,
    }


SECTION_BUILDERS = {
    "dataset": lambda rep: rep.dataset,
    "validation": lambda rep: rep.validation.to_dict(),
    "thresholds": lambda rep: rep.thresholds.to_dict(),
    "classification": _classification,
    "clusters": _clusters,
    "statistics": lambda rep: rep.statistics,
    "tech_distribution": lambda rep: rep.tech.to_dict(),
    "temporal": _temporal,
    "zones": _zones,
    "baseline": lambda rep: rep.baseline.to_dict(),
}
FULL_SECTIONS = tuple(SECTION_BUILDERS)


def build_report(
    *,
    config: dict,
    records: Sequence[TowerRecord],
    validation: ValidationReport,
    thresholds: ThresholdSet | None = None,
    towers: Sequence[EnrichedTower] = (),
    labels: Sequence[TowerClass] = (),
    summary: ClassificationSummary | None = None,
    predicate_counts: dict[str, int] | None = None,
    clusters: ClusterStage | None = None,
    statistics: dict | None = None,
    tech: TechDistribution | None = None,
    temporal: TemporalStage | None = None,
    zones: ZoneStage | None = None,
    baseline: BaselineResult | None = None,
    sections: Sequence[str] = FULL_SECTIONS,
) -> AnalysisReport:
    """Bundle stage outputs, refusing outputs computed over different record sets."""
    stages = {
        "thresholds": thresholds,
        "classification": summary,
        "clusters": clusters,
        "statistics": statistics,
        "tech_distribution": tech,
        "temporal": temporal,
        "zones": zones,
        "baseline": baseline,
    }
    for name in sections:
        if name not in SECTION_BUILDERS:
            raise ValueError(f"unknown report section {name!r}")
        if name in stages and stages[name] is None:
            raise ConsistencyError(f"section {name!r} requested but its stage output is missing")
    if clusters is not None and summary is None:
        raise ConsistencyError("cluster output needs the tower classification")

    n = len(records)
    checks = {"validation.accepted_count": validation.accepted_count}
    if summary is not None:
        checks["enriched towers"] = len(towers)
        checks["labels"] = len(labels)
        checks["classification total"] = summary.total
    if clusters is not None:
        checks["cluster assignment"] = len(clusters.clustering.assignment)
        checks["cluster members"] = sum(p.member_count for p in clusters.clustering.profiles)
    if tech is not None:
        checks["tech distribution total"] = tech.total
    if temporal is not None:
        checks["monthly series total"] = sum(c for _, _, c in temporal.series.buckets)
    bad = {k: v for k, v in checks.items() if v != n}
    if bad:
        detail = ", ".join(f"{k}={v}" for k, v in bad.items())
        raise ConsistencyError(f"stage outputs disagree with {n} accepted records: {detail}")
    if any(t.record != r for t, r in zip(towers, records)):
        raise ConsistencyError("enriched towers were not derived from the accepted records")
    if clusters is not None:
        sample_sum = sum(p.total_samples for p in clusters.clustering.profiles)
        if sample_sum != sum(r.samples for r in records):
            raise ConsistencyError("cluster sample totals do not add up to the tower totals")
    if zones is not None and any(not 0 <= i < n for i in zones.high_range_low_usage):
        raise ConsistencyError("high-range/low-usage indices fall outside the record set")
    return AnalysisReport(
        config=config,
        dataset=dataset_summary(records, validation),
        validation=validation,
        thresholds=thresholds,
        towers=list(towers),
        labels=list(labels),
        summary=summary,
        predicate_counts=predicate_counts or {},
        clusters=clusters,
        statistics=statistics,
        tech=tech,
        temporal=temporal,
        zones=zones,
        baseline=baseline,
        sections=tuple(sections),
    )


# --------------------------------------------------------------------------
# GeoJSON


def _point(lon: float, lat: float, props: dict) -> dict:
    return {"type": "Feature", "geometry": {"type": "Point", "coordinates": [lon, lat]}, "properties": props}


def clusters_geojson(rep: AnalysisReport) -> dict:
    if rep.clusters is None:
        raise DomainError("report has no cluster stage")
    cs = rep.clusters
    features = [
        _point(p.centroid[1], p.centroid[0], {
            "kind": "cluster",
            "cluster_id": p.cluster_id,
            "classification": lab.value,
            "total_samples": p.total_samples,
            "mean_range_m": p.mean_range_m,
            "member_count": p.member_count,
        })
        for p, lab in cs.classified()
    ]
    features += [
        _point(t.record.lon, t.record.lat, {
            "kind": "tower",
            "cell": t.record.cell,
            "classification": lab.value,
            "cluster_id": cid,
        })
        for t, lab, cid in zip(rep.towers, rep.labels, cs.clustering.assignment)
    ]
    return {"type": "FeatureCollection", "features": features}


def zones_geojson(rep: AnalysisReport, gap_points: Mapping[str, tuple[float, float]] | None = None) -> dict:
    if rep.zones is None:
        raise DomainError("report has no zone stage")
    features = [
        _point(z.lon, z.lat, {
            "kind": "demand_zone",
            "place": z.place,
            "admin": z.admin,
            "legacy_tower_count": z.legacy_tower_count,
            "max_legacy_density": z.max_legacy_density,
            "lte_present": z.lte_present,
        })
        for z in rep.zones.demand_zones
    ]
    for place in rep.zones.lte_gaps:
        if gap_points and place in gap_points:
            lat, lon = gap_points[place]
            features.append(_point(lon, lat, {"kind": "lte_gap", "place": place}))
    return {"type": "FeatureCollection", "features": features}


# --------------------------------------------------------------------------
# figure data


def five_number(values: Sequence[float]) -> dict:
    xs = sorted(values)
    return {
        "min": float(xs[0]),
        "q1": quantile_sorted(xs, 0.25),
        "median": quantile_sorted(xs, 0.5),
        "q3": quantile_sorted(xs, 0.75),
        "max": float(xs[-1]),
    }


def emit_figure_data(rep: AnalysisReport, figure: int) -> list[dict] | dict:
    """Plot-ready data for one of the six figures, projected from ``rep``."""
    if figure == 1:
        if rep.temporal is None:
            raise DomainError("report has no temporal stage")
        return rep.temporal.series.to_rows()
    if figure == 2:
        rows = []
        for radio in Radio:
            members = [t for t in rep.towers if t.record.radio is radio]
            if not members:
                continue
            for metric, values in (("range_m", [t.range_m for t in members]), ("samples", [t.samples for t in members])):
                rows.append({"radio": radio.value, "metric": metric, "n": len(values), **five_number(values)})
        return rows
    if figure == 3:
        return [
            {"samples": t.samples, "signal_density": t.signal_density, "label": lab.value}
            for t, lab in zip(rep.towers, rep.labels)
        ]
    if figure == 4:
        return clusters_geojson(rep)
    if figure == 5:
        rows = []
        for c in TowerClass:
            s = [t.samples for t, lab in zip(rep.towers, rep.labels) if lab is c]
            rows.append({
                "label": c.value,
                "n": len(s),
                "mean_samples": math.fsum(s) / len(s) if s else None,
                "sd_samples": statistics.stdev(s) if len(s) >= 2 else None,
            })
        return rows
    if figure == 6:
        if rep.summary is None:
            raise DomainError("report has no classification stage")
        total = rep.summary.total
        return [
            {"label": c.value, "count": n, "percentage": 100.0 * n / total if total else 0.0}
            for c, n in rep.summary.counts.items()
        ]
    raise ValueError(f"unknown figure {figure!r}; expected one of {FIGURES}")
