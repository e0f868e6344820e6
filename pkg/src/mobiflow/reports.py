"""Row/JSON renderings of analysis results. Output is deterministic text."""

from __future__ import annotations

import csv
import io
import json
import math

from .centrality import METRICS, CentralityReport, ReductionReport
from .cluster import ClusterConsensus
from .geo import ClusterDistanceReport


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """JSON text with sorted keys; non-finite floats become null."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


# -- lag ---------------------------------------------------------------------

LAG_HEADER = ("region", "best_shift", "r_at_best", "overlap_length")


def lag_rows(results):
    return [(r.region_id, r.best_shift, r.r_at_best, r.overlap_length) for r in results]


# -- clustering --------------------------------------------------------------

CLUSTER_HEADER = ("week", "mode", "mean", "std", "runs")


def cluster_rows(consensus: dict):
    return [
        (str(week), c.mode, c.mean, c.std, c.runs) for week, c in sorted(consensus.items())
    ]


def consensus_json(consensus: dict) -> dict:
    return {str(week): c.to_dict() for week, c in sorted(consensus.items())}


def partitions_json(consensus: dict) -> dict:
    return {
        "weeks": {
            str(week): c.representative.to_dict() for week, c in sorted(consensus.items())
        }
    }


def cluster_table_wide(consensus: dict) -> tuple:
    """Mode/Mean/Std rows with one column per week."""
    weeks = sorted(consensus)
    header = ["statistic"] + [str(w) for w in weeks]
    rows = [
        ["mode"] + [consensus[w].mode for w in weeks],
        ["mean"] + [consensus[w].mean for w in weeks],
        ["std"] + [consensus[w].std for w in weeks],
    ]
    return header, rows


# -- centrality --------------------------------------------------------------

CENTRALITY_HEADER = ("region",) + METRICS
REDUCTION_HEADER = ("region",) + tuple(f"{m}_reduction_pct" for m in METRICS)


def centrality_rows(report: CentralityReport):
    return [(n,) + tuple(v) for n, v in sorted(report.per_node.items())]


def reduction_rows(report: ReductionReport):
    return [(n,) + tuple(v) for n, v in sorted(report.per_node.items())]


def top_k_table(report: ReductionReport, k: int):
    """Side-by-side top-k per metric followed by Mean and Std rows."""
    header = ["rank"]
    for m in METRICS:
        header += [f"{m}_region", f"{m}_reduction_pct"]
    tops = [report.top_k(m, k) for m in METRICS]
    rows = []
    for i in range(max((len(t) for t in tops), default=0)):
        row = [i + 1]
        for t in tops:
            row += list(t[i]) if i < len(t) else [None, None]
        rows.append(row)
    for label, stats in (("mean", report.means), ("std", report.stds)):
        row = [label]
        for m in METRICS:
            row += [None, stats[m]]
        rows.append(row)
    return header, rows


def centrality_json(report: CentralityReport) -> dict:
    return {
        "week_start": str(report.week_start),
        "closeness_form": report.closeness_form,
        "per_node": {n: dict(zip(METRICS, v)) for n, v in sorted(report.per_node.items())},
    }


def reduction_json(report: ReductionReport) -> dict:
    return {
        "before": str(report.before),
        "after": str(report.after),
        "per_node": {n: dict(zip(METRICS, v)) for n, v in sorted(report.per_node.items())},
        "means": dict(report.means),
        "stds": dict(report.stds),
        "undefined": {m: list(v) for m, v in report.undefined.items()},
        "only_before": list(report.only_before),
        "only_after": list(report.only_after),
    }


# -- geo ---------------------------------------------------------------------

GEO_HEADER = (
    "week",
    "cluster",
    "medoid",
    "size",
    "cluster_avg_km",
    "country_avg_km",
    "reduction_pct",
    "singleton",
)


def geo_rows(report: ClusterDistanceReport):
    week = str(report.week_start) if report.week_start else ""
    return [
        (
            week,
            c.label,
            c.medoid,
            c.size,
            c.cluster_avg_km,
            c.country_avg_km,
            c.reduction_pct,
            int(c.singleton),
        )
        for c in report.per_cluster
    ]


def geo_json(report: ClusterDistanceReport) -> dict:
    return {
        "week_start": str(report.week_start) if report.week_start else None,
        "clusters": [
            {
                "cluster": c.label,
                "medoid": c.medoid,
                "size": c.size,
                "cluster_avg_km": c.cluster_avg_km,
                "country_avg_km": c.country_avg_km,
                "reduction_pct": c.reduction_pct,
                "singleton": c.singleton,
            }
            for c in report.per_cluster
        ],
    }


def partition_geojson(weeks: dict, centroids, medoids: dict | None = None) -> dict:
    """Point features per (week, region) carrying the cluster label."""
    features = []
    for week, partition in sorted(weeks.items()):
        meds = (medoids or {}).get(week, set())
        for region, label in sorted(partition.assignment.items()):
            c = centroids[region]
            props = {"week": str(week), "id": region, "cluster": label}
            if medoids is not None:
                props["medoid"] = region in meds
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [c.lon, c.lat]},
                    "properties": props,
                }
            )
    return {"type": "FeatureCollection", "features": features}
