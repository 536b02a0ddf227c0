"""End-to-end orchestration shared by the CLI and library callers."""

from __future__ import annotations

import dataclasses
import hashlib
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from celltriage.classifier import (
    STRATEGIC_MAX_SAMPLES,
    STRATEGIC_RANGE_M,
    TowerClass,
    classify_all,
    predicate_counts,
)
from celltriage.errors import DomainError
from celltriage.ingest import Radio, TowerRecord, ValidationReport, load_csv
from celltriage.metrics import enrich
from celltriage.planning import (
    ZONE_AGGREGATORS,
    geocode_towers,
    high_range_low_usage,
    lte_gap_locations,
    netdatadrilling_baseline,
    non4g_demand_zones,
    priority_ranking,
    tech_distribution,
)
from celltriage.report import (
    FULL_SECTIONS,
    AnalysisReport,
    ClusterStage,
    TemporalStage,
    ZoneStage,
    build_report,
)
from celltriage.spatial import Gazetteer, classify_cluster, cluster_thresholds, cluster_towers, load_gazetteer
from celltriage.stats import kruskal_wallis, pairwise_mann_whitney, pearson, pooled_t_test
from celltriage.temporal import (
    EARLY_PHASE,
    RECENT_PHASE,
    MonthRange,
    format_month_range,
    freshness,
    monthly_counts,
    phase_compare,
)
from celltriage.thresholds import QuantileConfig, ThresholdSet, compute_thresholds

THRESHOLD_FIELDS = tuple(f.name for f in dataclasses.fields(ThresholdSet))

SUBCOMMAND_SECTIONS: dict[str, tuple[str, ...]] = {
    "validate": ("dataset", "validation"),
    "classify": ("thresholds", "classification"),
    "cluster": ("clusters",),
    "stats": ("statistics", "tech_distribution"),
    "temporal": ("temporal",),
    "zones": ("thresholds", "zones"),
    "baseline": ("baseline",),
    "report": FULL_SECTIONS,
}
NEEDS_GAZETTEER = frozenset({"zones", "report"})


@dataclass(frozen=True)
class RunConfig:
    input_path: str = ""
    gazetteer_path: str | None = None
    quantiles: QuantileConfig = QuantileConfig()
    threshold_overrides: dict[str, float] = field(default_factory=dict)
    k: int = 20
    seed: int = 0
    workers: int = 1
    strategic_range_m: float = STRATEGIC_RANGE_M
    strategic_max_samples: float = STRATEGIC_MAX_SAMPLES
    phase_a: MonthRange = EARLY_PHASE
    phase_b: MonthRange = RECENT_PHASE
    window_days: int = 365
    n_c: int = 10
    priority_n: int = 3
    zone_agg: str = "max"
    welch: bool = False

    def __post_init__(self) -> None:
        unknown = set(self.threshold_overrides) - set(THRESHOLD_FIELDS)
        if unknown:
            raise DomainError(f"unknown threshold override(s): {sorted(unknown)}")
        if self.zone_agg not in ZONE_AGGREGATORS:
            raise DomainError(f"zone aggregator must be one of {ZONE_AGGREGATORS}")
        if self.k < 1 or self.n_c < 1 or self.window_days < 1 or self.workers < 1:
            raise DomainError("k, n_c, window and workers must be positive")

    def echo(self, input_digest: str | None = None) -> dict:
        """Configuration as echoed into every output header.

        Only the file names are echoed so output does not depend on the
        working directory; the input digest pins the exact bytes.
        """
        return {
            "input": Path(self.input_path).name if self.input_path else None,
            "input_sha256": input_digest,
            "gazetteer": Path(self.gazetteer_path).name if self.gazetteer_path else None,
            "quantiles": dataclasses.asdict(self.quantiles),
            "threshold_overrides": dict(sorted(self.threshold_overrides.items())),
            "k": self.k,
            "seed": self.seed,
            "strategic_range_m": self.strategic_range_m,
            "strategic_max_samples": self.strategic_max_samples,
            "phase_a": format_month_range(self.phase_a),
            "phase_b": format_month_range(self.phase_b),
            "window_days": self.window_days,
            "n_c": self.n_c,
            "priority_n": self.priority_n,
            "zone_agg": self.zone_agg,
            "welch": self.welch,
        }


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _battery_groups(groups: dict[str, list[float]]) -> dict:
    present = {k: v for k, v in groups.items() if v}
    out: dict = {"group_sizes": {k: len(v) for k, v in groups.items()}}
    try:
        out["kruskal_wallis"] = kruskal_wallis(list(present.values())).to_dict()
    except DomainError as exc:
        out["kruskal_wallis"] = {"skipped": str(exc)}
    out["pairwise"] = pairwise_mann_whitney(present) if len(present) >= 2 else []
    return out


class Analysis:
    """Lazily computed pipeline stages over one accepted record set."""

    def __init__(
        self,
        records: Sequence[TowerRecord],
        validation: ValidationReport,
        config: RunConfig = RunConfig(),
        gazetteer: Gazetteer | None = None,
        input_digest: str | None = None,
    ):
        self.records = list(records)
        self.validation = validation
        self.config = config
        self.gazetteer = gazetteer
        self.input_digest = input_digest

    @classmethod
    def from_config(cls, config: RunConfig) -> Analysis:
        records, validation = load_csv(config.input_path)
        gazetteer = load_gazetteer(config.gazetteer_path) if config.gazetteer_path else None
        return cls(records, validation, config, gazetteer, file_digest(config.input_path))

    @cached_property
    def towers(self):
        return enrich(self.records)

    @cached_property
    def thresholds(self) -> ThresholdSet:
        overrides = self.config.threshold_overrides
        if set(overrides) == set(THRESHOLD_FIELDS):
            return ThresholdSet(**overrides)
        return dataclasses.replace(compute_thresholds(self.towers, self.config.quantiles), **overrides)

    @cached_property
    def classification(self):
        cfg = self.config
        return classify_all(self.towers, self.thresholds, cfg.strategic_range_m, cfg.strategic_max_samples)

    @property
    def labels(self) -> list[TowerClass]:
        return [label for _, label in self.classification[0]]

    @cached_property
    def clusters(self) -> ClusterStage:
        cfg = self.config
        clustering = cluster_towers(self.towers, cfg.k, cfg.seed, cfg.workers)
        T = cluster_thresholds(clustering.profiles, cfg.quantiles)
        labels = [
            classify_cluster(p, T, cfg.strategic_range_m, cfg.strategic_max_samples) for p in clustering.profiles
        ]
        priority = priority_ranking(list(zip(clustering.profiles, labels)), cfg.priority_n)
        return ClusterStage(clustering, T, labels, priority, cfg.k, cfg.seed)

    @cached_property
    def statistics(self) -> dict:
        towers, labels = self.towers, self.labels
        by_radio = {r.value: [t for t in towers if t.record.radio is r] for r in Radio}
        by_class = {c.value: [float(t.samples) for t, lab in zip(towers, labels) if lab is c] for c in TowerClass}
        out = {
            "range_by_radio": _battery_groups({k: [float(t.range_m) for t in v] for k, v in by_radio.items()}),
            "samples_by_radio": _battery_groups({k: [float(t.samples) for t in v] for k, v in by_radio.items()}),
            "samples_by_classification": _battery_groups(by_class),
        }
        try:
            out["range_samples_correlation"] = pearson(
                [float(t.range_m) for t in towers], [float(t.samples) for t in towers]
            ).to_dict()
        except DomainError as exc:
            out["range_samples_correlation"] = {"skipped": str(exc)}

        cs = self.clusters
        over = [p for p, lab in cs.classified() if lab.is_over_utilized]
        rest = [p for p, lab in cs.classified() if not lab.is_over_utilized]
        cluster_tests = {"over_utilized": len(over), "other": len(rest)}
        for name, attr in (("mean_range_m", "mean_range_m"), ("total_samples", "total_samples")):
            try:
                cluster_tests[name] = pooled_t_test(
                    [float(getattr(p, attr)) for p in over],
                    [float(getattr(p, attr)) for p in rest],
                    welch=self.config.welch,
                ).to_dict()
            except DomainError as exc:
                cluster_tests[name] = {"skipped": str(exc)}
        out["cluster_t_tests"] = cluster_tests
        return out

    @cached_property
    def tech(self):
        return tech_distribution(self.records)

    @cached_property
    def temporal(self) -> TemporalStage:
        cfg = self.config
        series = monthly_counts(self.records)
        return TemporalStage(
            series=series,
            comparison=phase_compare(series, cfg.phase_a, cfg.phase_b),
            phase_a=format_month_range(cfg.phase_a),
            phase_b=format_month_range(cfg.phase_b),
            window_days=cfg.window_days,
            freshness=freshness(self.records, cfg.window_days),
        )

    @cached_property
    def places(self) -> list[str]:
        if self.gazetteer is None:
            raise DomainError("a gazetteer is required for place-level analysis")
        return geocode_towers(self.towers, self.gazetteer)

    @cached_property
    def zones(self) -> ZoneStage:
        cfg = self.config
        wide = set(map(id, high_range_low_usage(self.towers, cfg.strategic_range_m, cfg.strategic_max_samples)))
        return ZoneStage(
            high_range_low_usage=[i for i, t in enumerate(self.towers) if id(t) in wide],
            demand_zones=non4g_demand_zones(self.towers, self.thresholds, self.gazetteer, cfg.zone_agg, self.places),
            lte_gaps=lte_gap_locations(self.towers, self.gazetteer, self.places),
            zone_agg=cfg.zone_agg,
        )

    @cached_property
    def baseline(self):
        return netdatadrilling_baseline(self.records, self.config.n_c)

    def report(self, sections: Sequence[str] = FULL_SECTIONS) -> AnalysisReport:
        """Run the stages the requested sections need and assemble them."""
        wanted = set(sections)
        need_clusters = bool(wanted & {"clusters", "statistics"})
        if need_clusters or wanted & {"thresholds", "classification", "zones"}:
            towers, labels = self.towers, self.labels
            summary, thresholds = self.classification[1], self.thresholds
            preds = predicate_counts(towers, thresholds)
        else:
            towers, labels, summary, thresholds, preds = (), (), None, None, None
        return build_report(
            config=self.config.echo(self.input_digest),
            records=self.records,
            validation=self.validation,
            thresholds=thresholds,
            towers=towers,
            labels=labels,
            summary=summary,
            predicate_counts=preds,
            clusters=self.clusters if need_clusters else None,
            statistics=self.statistics if "statistics" in wanted else None,
            tech=self.tech if "tech_distribution" in wanted else None,
            temporal=self.temporal if "temporal" in wanted else None,
            zones=self.zones if "zones" in wanted else None,
            baseline=self.baseline if "baseline" in wanted else None,
            sections=sections,
        )
