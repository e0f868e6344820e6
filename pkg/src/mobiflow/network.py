"""Weekly flow graphs: construction, thresholding and DOT/GeoJSON export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import UnknownWeekError
from .ingest import FLOW_KINDS, GeoPoint, WeeklyFlowTable, parse_date

DEFAULT_THRESHOLD = 10_000.0


@dataclass(frozen=True, eq=False)
class FlowNetwork:
    """Undirected weighted graph of one week's flows.

    ``edges`` maps sorted pairs ``(u, v)`` with ``u < v`` to a positive weight.
    ``total_flow`` is each node's outgoing flow in the source records,
    self-loop (intra-region) flow included.
    """

    week_start: date
    centroids: Mapping[str, GeoPoint]
    total_flow: Mapping[str, float]
    edges: Mapping[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        for (u, v), w in self.edges.items():
            if u == v:
                raise ValueError(f"self-loop edge on {u!r}")
            if not u < v:
                raise ValueError(f"edge key {(u, v)} must be sorted")
            if not w > 0:
                raise ValueError(f"edge {(u, v)} has non-positive weight {w}")
            if u not in self.total_flow or v not in self.total_flow:
                raise ValueError(f"edge {(u, v)} references an unknown node")

    @cached_property
    def nodes(self) -> tuple:
        return tuple(sorted(self.total_flow))

    @cached_property
    def index(self) -> dict:
        return {n: i for i, n in enumerate(self.nodes)}

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, FlowNetwork):
            return NotImplemented
        return (
            self.week_start == other.week_start
            and dict(self.centroids) == dict(other.centroids)
            and dict(self.total_flow) == dict(other.total_flow)
            and dict(self.edges) == dict(other.edges)
        )

    __hash__ = None

    @cached_property
    def csr(self):
        """``(indptr, indices, weights)`` with neighbours sorted by node index."""
        n = len(self.nodes)
        idx = self.index
        rows, cols, ws = [], [], []
        for (u, v), w in self.edges.items():
            i, j = idx[u], idx[v]
            rows += [i, j]
            cols += [j, i]
            ws += [w, w]
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        ws = np.asarray(ws, dtype=np.float64)
        order = np.lexsort((cols, rows))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, cols[order], ws[order]

    def neighbors(self, node):
        indptr, indices, weights = self.csr
        i = self.index[node]
        s, e = indptr[i], indptr[i + 1]
        return {self.nodes[j]: float(w) for j, w in zip(indices[s:e], weights[s:e])}

    def scaled(self, factor: float) -> "FlowNetwork":
        return FlowNetwork(
            self.week_start,
            self.centroids,
            self.total_flow,
            {k: w * factor for k, w in self.edges.items()},
        )


def build_week_network(
    table: WeeklyFlowTable, week: date, flow_kind: str = "visitor"
) -> FlowNetwork:
    """Symmetrised flow graph for ``week``: w{u,v} = flow(u->v) + flow(v->u)."""
    if flow_kind not in FLOW_KINDS:
        raise ValueError(f"unknown flow_kind {flow_kind!r}; expected one of {FLOW_KINDS}")
    if isinstance(week, str):
        week = parse_date(week)
    records = table.week_records(week)
    if not records:
        raise UnknownWeekError(f"week {week} not in table (weeks: {[str(w) for w in table.weeks]})")
    total: dict = {}
    edges: dict = {}
    for rec in sorted(records, key=lambda r: (r.origin, r.destination)):
        f = rec.flow(flow_kind)
        total[rec.origin] = total.get(rec.origin, 0.0) + f
        total.setdefault(rec.destination, 0.0)
        if rec.origin != rec.destination:
            key = tuple(sorted((rec.origin, rec.destination)))
            edges[key] = edges.get(key, 0.0) + f
    edges = {k: w for k, w in sorted(edges.items()) if w > 0}
    centroids = {n: table.centroids[n] for n in sorted(total)}
    return FlowNetwork(week, centroids, dict(sorted(total.items())), edges)


def edge_threshold_subgraph(g: FlowNetwork, threshold: float) -> FlowNetwork:
    """Keep edges with weight >= threshold; every node survives."""
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    kept = {k: w for k, w in g.edges.items() if w >= threshold}
    return FlowNetwork(g.week_start, g.centroids, g.total_flow, kept)


# -- export ------------------------------------------------------------------


def _dot_id(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: FlowNetwork) -> str:
    lines = [f"graph {_dot_id('flows_' + g.week_start.isoformat())} {{"]
    for n in g.nodes:
        c = g.centroids[n]
        lines.append(
            f"  {_dot_id(n)} [total_flow={g.total_flow[n]!r}, lat={c.lat!r}, lon={c.lon!r}];"
        )
    for (u, v), w in sorted(g.edges.items()):
        lines.append(f"  {_dot_id(u)} -- {_dot_id(v)} [weight={w!r}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_geojson(g: FlowNetwork, node_properties: Mapping[str, dict] | None = None) -> dict:
    """Nodes as Point features and edges as LineString features ([lon, lat] order)."""
    features = []
    for n in g.nodes:
        c = g.centroids[n]
        props = {"kind": "node", "id": n, "total_flow": g.total_flow[n]}
        if node_properties and n in node_properties:
            props.update(node_properties[n])
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [c.lon, c.lat]},
                "properties": props,
            }
        )
    for (u, v), w in sorted(g.edges.items()):
        cu, cv = g.centroids[u], g.centroids[v]
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[cu.lon, cu.lat], [cv.lon, cv.lat]],
                },
                "properties": {"kind": "edge", "source": u, "target": v, "weight": w},
            }
        )
    return {
        "type": "FeatureCollection",
        "properties": {"week_start": g.week_start.isoformat()},
        "features": features,
    }


def dumps_geojson(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
