"""Weighted degree, closeness and betweenness, and week-over-week reductions.

Path-based metrics treat each edge as a cost of ``1 / weight``: heavier flow
means a shorter effective distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Mapping

import numpy as np

from . import kernels
from .network import FlowNetwork

METRICS = ("degree", "closeness", "betweenness")
CLOSENESS_FORMS = ("centrality", "average")
DEFAULT_TOP_K = 10


@dataclass(frozen=True)
class CentralityReport:
    week_start: date
    per_node: Mapping[str, tuple]  # region -> (degree, closeness, betweenness)
    closeness_form: str = "centrality"

    def metric(self, name: str) -> dict:
        i = METRICS.index(name)
        return {n: vals[i] for n, vals in self.per_node.items()}


@dataclass(frozen=True)
class ReductionReport:
    before: date
    after: date
    per_node: Mapping[str, tuple]  # region -> (degree_red, closeness_red, betweenness_red); None = undefined
    means: Mapping[str, float]
    stds: Mapping[str, float]
    undefined: Mapping[str, tuple]  # metric -> regions whose before-value was 0
    only_before: tuple = ()
    only_after: tuple = ()

    def metric(self, name: str) -> dict:
        i = METRICS.index(name)
        return {n: vals[i] for n, vals in self.per_node.items()}

    def top_k(self, name: str, k: int = DEFAULT_TOP_K) -> list:
        """Largest reductions first; equal reductions ordered by region id."""
        vals = [(n, v) for n, v in self.metric(name).items() if v is not None]
        vals.sort(key=lambda item: (-item[1], item[0]))
        return vals[:k]


def _cost_csr(g: FlowNetwork):
    indptr, indices, weights = g.csr
    return indptr, indices, 1.0 / weights


def weighted_degree(g: FlowNetwork) -> dict:
    indptr, _, weights = g.csr
    rows = np.repeat(np.arange(len(g)), np.diff(indptr))
    sums = np.bincount(rows, weights=weights, minlength=len(g))
    return {n: float(s) for n, s in zip(g.nodes, sums)}


def _path_metrics(g: FlowNetwork):
    indptr, indices, cost = _cost_csr(g)
    return kernels.path_metrics(indptr, indices, cost, kernels.PATH_RTOL)


def closeness_from_distances(dist: np.ndarray, form: str = "centrality") -> np.ndarray:
    """Per-row closeness from an all-pairs distance matrix (``inf`` = unreachable).

    ``centrality``: ``r / S * r / (n - 1)`` with ``r`` reachable peers and ``S``
    their summed distance; 0 when nothing is reachable.
    ``average``: mean distance to reachable peers; NaN when nothing is reachable.
    """
    if form not in CLOSENESS_FORMS:
        raise ValueError(f"closeness form must be one of {CLOSENESS_FORMS}")
    n = dist.shape[0]
    out = np.zeros(n) if form == "centrality" else np.full(n, np.nan)
    for i in range(n):
        row = dist[i]
        reach = np.isfinite(row)
        reach[i] = False
        r = int(reach.sum())
        if r == 0:
            continue
        total = float(row[reach].sum())
        if form == "average":
            out[i] = total / r
        elif total > 0:
            out[i] = (r / total) * (r / (n - 1))
    return out


def closeness(g: FlowNetwork, form: str = "centrality") -> dict:
    if len(g) == 0:
        return {}
    dist, _ = _path_metrics(g)
    return dict(zip(g.nodes, closeness_from_distances(dist, form).tolist()))


def normalize_betweenness(raw: np.ndarray) -> np.ndarray:
    """Brandes totals over ordered source/target pairs -> fraction of (n-1)(n-2)/2 pairs."""
    n = raw.shape[0]
    if n <= 2:
        return np.zeros(n)
    return raw / ((n - 1) * (n - 2))


def betweenness(g: FlowNetwork) -> dict:
    if len(g) == 0:
        return {}
    _, raw = _path_metrics(g)
    return dict(zip(g.nodes, normalize_betweenness(raw).tolist()))


def centrality_report(g: FlowNetwork, closeness_form: str = "centrality") -> CentralityReport:
    deg = weighted_degree(g)
    if len(g):
        dist, raw = _path_metrics(g)
        clo = closeness_from_distances(dist, closeness_form)
        btw = normalize_betweenness(raw)
    else:
        clo = btw = np.zeros(0)
    per_node = {
        n: (deg[n], float(clo[i]), float(btw[i])) for i, n in enumerate(g.nodes)
    }
    return CentralityReport(g.week_start, per_node, closeness_form)


def _reduction(before: float, after: float):
    if before is None or after is None or not math.isfinite(before) or not math.isfinite(after):
        return None
    if before == 0:
        return None
    return (before - after) / before * 100.0


def relative_reduction(before: CentralityReport, after: CentralityReport) -> ReductionReport:
    """Percent drop ``(before - after) / before * 100`` per node and metric.

    Nodes present in only one report are listed and skipped; a zero
    before-value leaves that metric undefined for the node and out of the
    mean/std.
    """
    shared = sorted(set(before.per_node) & set(after.per_node))
    per_node = {}
    for n in shared:
        per_node[n] = tuple(
            _reduction(b, a) for b, a in zip(before.per_node[n], after.per_node[n])
        )
    means, stds, undefined = {}, {}, {}
    for i, name in enumerate(METRICS):
        vals = [v[i] for v in per_node.values() if v[i] is not None]
        undefined[name] = tuple(n for n, v in per_node.items() if v[i] is None)
        if vals:
            arr = np.asarray(vals)
            means[name] = float(arr.mean())
            stds[name] = float(arr.std())
        else:
            means[name] = stds[name] = float("nan")
    return ReductionReport(
        before=before.week_start,
        after=after.week_start,
        per_node=per_node,
        means=means,
        stds=stds,
        undefined=undefined,
        only_before=tuple(sorted(set(before.per_node) - set(after.per_node))),
        only_after=tuple(sorted(set(after.per_node) - set(before.per_node))),
    )
