"""Spatiotemporal analysis of inter-region mobility flows.

Lag estimation between awareness and mobility series, consensus label
propagation over weekly flow networks, weighted centrality reductions and
geodesic cluster-distance reports.
"""

__version__ = "0.1.0"

from .centrality import betweenness, centrality_report, closeness, relative_reduction, weighted_degree
from .cluster import ClusterConsensus, Partition, consensus_cluster, label_propagation
from .geo import ClusterDistanceReport, cluster_distance_report, haversine_km
from .ingest import (
    GeoPoint,
    TimeSeries,
    WeeklyFlowTable,
    interpolate_weekly_to_daily,
    minmax_scale,
    parse_daily_mobility,
    parse_flow_records,
    parse_weekly_trends,
)
from .lagcorr import LagResult, best_lag, peak_offset, pearson
from .network import FlowNetwork, build_week_network, edge_threshold_subgraph

__all__ = [
    "ClusterConsensus",
    "ClusterDistanceReport",
    "FlowNetwork",
    "GeoPoint",
    "LagResult",
    "Partition",
    "TimeSeries",
    "WeeklyFlowTable",
    "best_lag",
    "betweenness",
    "build_week_network",
    "centrality_report",
    "closeness",
    "cluster_distance_report",
    "consensus_cluster",
    "edge_threshold_subgraph",
    "haversine_km",
    "interpolate_weekly_to_daily",
    "label_propagation",
    "minmax_scale",
    "parse_daily_mobility",
    "parse_flow_records",
    "parse_weekly_trends",
    "peak_offset",
    "pearson",
    "relative_reduction",
    "weighted_degree",
]
