"""Spatial clustering of towers, cluster KPIs, and offline reverse geocoding."""

from __future__ import annotations

import csv
import math
import statistics
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from celltriage.classifier import STRATEGIC_MAX_SAMPLES, STRATEGIC_RANGE_M, TowerClass, decide
from celltriage.errors import DomainError, InputError
from celltriage.metrics import EnrichedTower
from celltriage.thresholds import QuantileConfig, ThresholdSet, thresholds_from_values

KM_PER_DEG_LAT = 110.574
KM_PER_DEG_LON_EQUATOR = 111.320
EARTH_RADIUS_KM = 6371.0088
MAX_LLOYD_ITERATIONS = 100


def project(lat: float, lon: float, ref_lat: float) -> tuple[float, float]:
    """Equirectangular projection to kilometres around ``ref_lat``."""
    return KM_PER_DEG_LON_EQUATOR * math.cos(math.radians(ref_lat)) * lon, KM_PER_DEG_LAT * lat


def project_towers(towers: Sequence[EnrichedTower]) -> np.ndarray:
    ref_lat = math.fsum(t.record.lat for t in towers) / len(towers)
    return np.array([project(t.record.lat, t.record.lon, ref_lat) for t in towers], dtype=float).reshape(-1, 2)


# --------------------------------------------------------------------------
# k-means


@dataclass
class KMeansResult:
    labels: list[int]
    centroids: np.ndarray
    objective_history: list[float]
    iterations: int


def _nearest_chunk(points: np.ndarray, centroids: np.ndarray, current: np.ndarray | None) -> np.ndarray:
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    if current is not None:
        # a point tied between its current cluster and another one stays put
        rows = np.arange(len(points))
        keep = d2[rows, current] == d2[rows, labels]
        labels[keep] = current[keep]
    return labels


def _assign(points: np.ndarray, centroids: np.ndarray, workers: int, current: np.ndarray | None = None) -> np.ndarray:
    # each point is handled independently, so chunking cannot change results
    if workers <= 1 or len(points) < 2 * workers:
        return _nearest_chunk(points, centroids, current)
    bounds = np.array_split(np.arange(len(points)), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            lambda idx: _nearest_chunk(points[idx], centroids, None if current is None else current[idx]), bounds
        ))
    return np.concatenate(parts)


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = [points[int(rng.integers(n))]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            cum = np.cumsum(d2)
            idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centers.append(points[idx])
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return np.array(centers, dtype=float)


def _objective(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    return math.fsum(((points - centroids[labels]) ** 2).sum(axis=1).tolist())


def _update(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = len(centroids)
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    new = centroids.copy()
    nonempty = counts > 0
    for dim in range(points.shape[1]):
        sums = np.bincount(labels, weights=points[:, dim], minlength=k)
        new[nonempty, dim] = sums[nonempty] / counts[nonempty]
    for j in np.flatnonzero(~nonempty):
        # reseed with the point lying farthest from its own centroid
        dist = ((points - new[labels]) ** 2).sum(axis=1)
        movable = counts[labels] > 1
        dist[~movable] = -1.0
        p = int(dist.argmax())
        counts[labels[p]] -= 1
        labels[p] = j
        counts[j] = 1
        new[j] = points[p]
    return labels, new


def fit_kmeans(points: Sequence[Sequence[float]] | np.ndarray, k: int, seed: int = 0, workers: int = 1) -> KMeansResult:
    """Seeded k-means++ followed by Lloyd iterations.

    Stops at an assignment fixpoint or after 100 iterations. The result
    depends only on ``(points, k, seed)``; ``workers`` parallelizes the
    assignment step without affecting it.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2) if len(points) else np.empty((0, 2))
    n = len(pts)
    if k < 1 or n < k:
        raise DomainError(f"k-means needs 1 <= k <= number of points (k={k}, n={n})")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(pts, k, rng)
    labels = _assign(pts, centroids, workers)
    history = [_objective(pts, labels, centroids)]
    iterations = 0
    for iterations in range(1, MAX_LLOYD_ITERATIONS + 1):
        labels, centroids = _update(pts, labels, centroids)
        new_labels = _assign(pts, centroids, workers, labels)
        history.append(_objective(pts, new_labels, centroids))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return KMeansResult(labels=labels.tolist(), centroids=centroids, objective_history=history, iterations=iterations)


def kmeans(points: Sequence[Sequence[float]] | np.ndarray, k: int, seed: int = 0, workers: int = 1) -> list[int]:
    return fit_kmeans(points, k, seed, workers).labels


# --------------------------------------------------------------------------
# cluster profiles


@dataclass(frozen=True)
class ClusterProfile:
    cluster_id: str
    member_count: int
    total_samples: int
    mean_range_m: float
    cluster_density: float
    median_active_days: float
    centroid: tuple[float, float]
    members: tuple[int, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "member_count": self.member_count,
            "total_samples": self.total_samples,
            "mean_range_m": self.mean_range_m,
            "cluster_density": self.cluster_density,
            "median_active_days": self.median_active_days,
            "centroid": {"lat": self.centroid[0], "lon": self.centroid[1]},
            "members": list(self.members),
        }


def aggregate_cluster(members: Sequence[EnrichedTower], cluster_id: str) -> ClusterProfile:
    if not members:
        raise DomainError(f"cluster {cluster_id} has no members")
    n = len(members)
    total = sum(t.samples for t in members)
    mean_range = math.fsum(t.range_m for t in members) / n
    return ClusterProfile(
        cluster_id=cluster_id,
        member_count=n,
        total_samples=total,
        mean_range_m=mean_range,
        cluster_density=total / mean_range,
        median_active_days=float(statistics.median(t.active_days for t in members)),
        centroid=(
            math.fsum(t.record.lat for t in members) / n,
            math.fsum(t.record.lon for t in members) / n,
        ),
        members=tuple(t.record.cell for t in members),
    )


@dataclass
class Clustering:
    profiles: list[ClusterProfile]
    assignment: list[str]  # cluster id per tower, input order


def cluster_towers(towers: Sequence[EnrichedTower], k: int = 20, seed: int = 0, workers: int = 1) -> Clustering:
    """Group towers spatially and build one profile per cluster.

    Cluster ids ``T00, T01, ...`` are numbered by first appearance in input
    order, so they do not depend on k-means' internal label numbering.
    """
    labels = kmeans(project_towers(towers), k, seed, workers)
    renumber: dict[int, int] = {}
    for lab in labels:
        renumber.setdefault(lab, len(renumber))
    width = max(2, len(str(k - 1)))
    ids = [f"T{renumber[lab]:0{width}d}" for lab in labels]
    groups: dict[str, list[EnrichedTower]] = {}
    for cid, t in zip(ids, towers):
        groups.setdefault(cid, []).append(t)
    profiles = [aggregate_cluster(groups[cid], cid) for cid in sorted(groups)]
    return Clustering(profiles=profiles, assignment=ids)


def cluster_thresholds(profiles: Sequence[ClusterProfile], config: QuantileConfig = QuantileConfig()) -> ThresholdSet:
    """Thresholds recomputed over cluster aggregates rather than towers."""
    return thresholds_from_values(
        [p.total_samples for p in profiles],
        [p.cluster_density for p in profiles],
        [p.median_active_days for p in profiles],
        config,
    )


def classify_cluster(
    p: ClusterProfile,
    T: ThresholdSet,
    strategic_range_m: float = STRATEGIC_RANGE_M,
    strategic_max_samples: float = STRATEGIC_MAX_SAMPLES,
) -> TowerClass:
    return decide(
        p.total_samples, p.cluster_density, p.median_active_days, p.mean_range_m, T,
        strategic_range_m, strategic_max_samples,
    )


# --------------------------------------------------------------------------
# reverse geocoding


@dataclass(frozen=True)
class GazetteerEntry:
    name: str
    admin: str
    lat: float
    lon: float


class Gazetteer:
    def __init__(self, entries: Sequence[GazetteerEntry]):
        for e in entries:
            if not (-90.0 <= e.lat <= 90.0 and -180.0 <= e.lon <= 180.0):
                raise DomainError(f"gazetteer entry {e.name!r} has out-of-range coordinates")
        self.entries = list(entries)
        self._lat = np.radians([e.lat for e in self.entries])
        self._lon = np.radians([e.lon for e in self.entries])

    def __len__(self) -> int:
        return len(self.entries)

    def by_name(self, name: str) -> GazetteerEntry:
        return next(e for e in self.entries if e.name == name)


def load_gazetteer(path: str | Path) -> Gazetteer:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"name", "admin", "lat", "lon"} <= set(reader.fieldnames):
                raise InputError(f"{path}: gazetteer header must be name,admin,lat,lon")
            entries = [GazetteerEntry(r["name"], r["admin"], float(r["lat"]), float(r["lon"])) for r in reader]
    except OSError as exc:
        raise InputError(f"cannot open gazetteer {path}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed gazetteer row: {exc}") from exc
    if not entries:
        raise InputError(f"{path}: gazetteer is empty")
    return Gazetteer(entries)


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def reverse_geocode(lat: float, lon: float, g: Gazetteer) -> tuple[str, str, float]:
    """Nearest gazetteer entry by great-circle distance; ties go to the smaller name."""
    if len(g) == 0:
        raise DomainError("gazetteer is empty")
    p = math.radians(lat)
    a = np.sin((g._lat - p) / 2) ** 2 + math.cos(p) * np.cos(g._lat) * np.sin((g._lon - math.radians(lon)) / 2) ** 2
    d = 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(a)))
    best = float(d.min())
    entry = min((g.entries[i] for i in np.flatnonzero(d == best)), key=lambda e: e.name)
    return entry.name, entry.admin, best
