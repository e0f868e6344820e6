"""Great-circle distances and cluster-vs-country average distance reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Mapping

import numpy as np

from . import kernels
from .cluster import Partition
from .errors import MissingCentroidError
from .ingest import GeoPoint

EARTH_RADIUS_KM = kernels.EARTH_RADIUS_KM
MEDOID_ATOL_KM = 1e-9


def haversine_km(p: GeoPoint, q: GeoPoint) -> float:
    phi1, phi2 = math.radians(p.lat), math.radians(q.lat)
    dphi = phi2 - phi1
    dlam = math.radians(q.lon - p.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, max(0.0, h))))


def distance_matrix(points) -> np.ndarray:
    lat = np.array([p.lat for p in points], dtype=float)
    lon = np.array([p.lon for p in points], dtype=float)
    return kernels.haversine_matrix(lat, lon, lat, lon, EARTH_RADIUS_KM)


@dataclass(frozen=True)
class ClusterDistance:
    label: int
    medoid: str
    size: int
    cluster_avg_km: float | None
    country_avg_km: float
    reduction_pct: float | None

    @property
    def singleton(self) -> bool:
        return self.size == 1


@dataclass(frozen=True)
class ClusterDistanceReport:
    week_start: date | None
    per_cluster: tuple


def cluster_distance_report(
    partition: Partition,
    centroids: Mapping[str, GeoPoint],
    week_start: date | None = None,
) -> ClusterDistanceReport:
    """Compare each cluster's spread around its medoid with the country-wide spread.

    The medoid is the member with the smallest mean distance to the other
    members (lexicographically smallest region on ties). ``country_avg_km``
    averages the medoid's distance to every other region in ``centroids``.
    Singleton clusters get ``None`` for the cluster average and reduction.
    """
    missing = sorted(set(partition.assignment) - set(centroids))
    if missing:
        raise MissingCentroidError(f"no centroid for clustered regions {missing}")
    regions = sorted(centroids)
    pos = {r: i for i, r in enumerate(regions)}
    dist = distance_matrix([centroids[r] for r in regions])
    rows = []
    for label, members in sorted(partition.clusters().items()):
        idx = np.array([pos[m] for m in members])
        if len(members) > 1:
            sub = dist[np.ix_(idx, idx)]
            means = sub.sum(axis=1) / (len(members) - 1)
            best = means.min()
            # members are sorted, so the first within tolerance is the smallest id
            k = int(np.flatnonzero(means <= best + MEDOID_ATOL_KM)[0])
        else:
            k = 0
        medoid = members[k]
        mates = [pos[m] for m in members if m != medoid]
        cluster_avg = float(dist[pos[medoid], mates].mean()) if mates else None
        others = [i for i in range(len(regions)) if i != pos[medoid]]
        country_avg = float(dist[pos[medoid], others].mean()) if others else 0.0
        if cluster_avg is None or country_avg == 0:
            reduction = None
        else:
            reduction = (country_avg - cluster_avg) / country_avg * 100.0
        rows.append(
            ClusterDistance(label, medoid, len(members), cluster_avg, country_avg, reduction)
        )
    return ClusterDistanceReport(week_start, tuple(rows))
