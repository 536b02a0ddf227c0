"""Cell-tower utilization triage for OpenCelliD-style snapshots."""

from celltriage.classifier import TowerClass, classify_all, classify_tower
from celltriage.errors import ConsistencyError, DomainError, InputError
from celltriage.ingest import Radio, Reason, TowerRecord, ValidationReport, parse_dataset
from celltriage.metrics import EnrichedTower, enrich
from celltriage.thresholds import QuantileConfig, ThresholdSet, compute_thresholds, quantile

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError",
    "DomainError",
    "EnrichedTower",
    "InputError",
    "QuantileConfig",
    "Radio",
    "Reason",
    "ThresholdSet",
    "TowerClass",
    "TowerRecord",
    "ValidationReport",
    "classify_all",
    "classify_tower",
    "compute_thresholds",
    "enrich",
    "parse_dataset",
    "quantile",
]
