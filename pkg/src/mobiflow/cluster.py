"""Asynchronous label propagation and many-run consensus statistics.

Each sweep visits nodes in a fresh seeded random order. A visited node keeps
its label if that label already carries the maximal summed edge weight among
its neighbours' labels; otherwise it adopts one of the maximal labels, chosen
by a seeded uniform draw. A sweep with no change means every node holds one
of its neighbourhood's heaviest labels, and the run stops there.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import kernels
from .errors import NonConvergenceError
from .network import FlowNetwork

MAX_SWEEPS = 1000
DEFAULT_RUNS = 100


@dataclass(frozen=True)
class Partition:
    assignment: Mapping[str, int]
    cluster_count: int

    @classmethod
    def from_labels(cls, nodes, labels) -> "Partition":
        """Relabel to 0..k-1 by first occurrence in sorted node order."""
        pairs = sorted(zip(nodes, (int(x) for x in labels)))
        remap: dict = {}
        assignment = {}
        for node, lab in pairs:
            assignment[node] = remap.setdefault(lab, len(remap))
        return cls(assignment, len(remap))

    def clusters(self) -> dict:
        out: dict = {}
        for node, lab in sorted(self.assignment.items()):
            out.setdefault(lab, []).append(node)
        return out

    def to_dict(self):
        return {"cluster_count": self.cluster_count, "assignment": dict(sorted(self.assignment.items()))}

    @classmethod
    def from_dict(cls, data) -> "Partition":
        assignment = {str(k): int(v) for k, v in data["assignment"].items()}
        return cls.from_labels(list(assignment), list(assignment.values()))


@dataclass(frozen=True)
class ClusterConsensus:
    runs: int
    counts: tuple
    mode: int
    mean: float
    std: float
    representative: Partition
    representative_run: int
    representative_modularity: float
    weighted: bool = True

    def to_dict(self):
        return {
            "runs": self.runs,
            "counts": list(self.counts),
            "mode": self.mode,
            "mean": self.mean,
            "std": self.std,
            "weighted": self.weighted,
            "representative": {
                **self.representative.to_dict(),
                "run": self.representative_run,
                "modularity": self.representative_modularity,
                "selection": "max weighted modularity among mode-count runs, lowest run on ties",
            },
        }


def derive_seed(base_seed: int, run: int) -> int:
    """Per-run seed mixed from (base_seed, run); independent of execution order."""
    ss = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, int(run)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _graph_arrays(g: FlowNetwork, weighted: bool):
    indptr, indices, weights = g.csr
    if not weighted:
        weights = np.ones_like(weights)
    return indptr, indices, weights


def label_propagation(
    g: FlowNetwork, seed: int, weighted: bool = True, max_sweeps: int = MAX_SWEEPS
) -> Partition:
    n = len(g)
    if n == 0:
        raise ValueError("label propagation needs at least one node")
    indptr, indices, weights = _graph_arrays(g, weighted)
    rng = np.random.default_rng(seed)
    labels = np.arange(n, dtype=np.int64)
    for _ in range(max_sweeps):
        order = rng.permutation(n).astype(np.int64)
        draws = rng.random(n)
        if kernels.lpa_sweep(indptr, indices, weights, labels, order, draws, kernels.LABEL_RTOL) == 0:
            return Partition.from_labels(g.nodes, labels)
    raise NonConvergenceError(
        f"label propagation did not settle within {max_sweeps} sweeps",
        partition=Partition.from_labels(g.nodes, labels),
    )


def unstable_nodes(g: FlowNetwork, partition: Partition, weighted: bool = True) -> list:
    """Nodes whose label is not among their neighbourhood's heaviest labels."""
    bad = []
    for node in g.nodes:
        nbrs = g.neighbors(node)
        if not nbrs:
            continue
        acc: Counter = Counter()
        for v, w in nbrs.items():
            acc[partition.assignment[v]] += w if weighted else 1.0
        best = max(acc.values())
        if acc.get(partition.assignment[node], 0.0) < best - kernels.LABEL_RTOL * best:
            bad.append(node)
    return bad


def modularity(g: FlowNetwork, partition: Partition) -> float:
    """Weighted Newman modularity; 0 for an edgeless graph."""
    m = sum(g.edges.values())
    if m == 0:
        return 0.0
    inside: dict = {}
    degree: dict = {}
    for (u, v), w in g.edges.items():
        cu, cv = partition.assignment[u], partition.assignment[v]
        degree[cu] = degree.get(cu, 0.0) + w
        degree[cv] = degree.get(cv, 0.0) + w
        if cu == cv:
            inside[cu] = inside.get(cu, 0.0) + w
    return sum(inside.get(c, 0.0) / m - (d / (2.0 * m)) ** 2 for c, d in degree.items())


def count_mode(counts) -> int:
    """Most frequent count; ties go to the smaller count."""
    tally = Counter(counts)
    top = max(tally.values())
    return min(c for c, k in tally.items() if k == top)


def consensus_cluster(
    g: FlowNetwork,
    runs: int = DEFAULT_RUNS,
    base_seed: int = 0,
    weighted: bool = True,
    workers: int = 1,
) -> ClusterConsensus:
    if runs < 1:
        raise ValueError("runs must be >= 1")

    def one(i):
        try:
            return label_propagation(g, derive_seed(base_seed, i), weighted=weighted)
        except NonConvergenceError as exc:
            raise NonConvergenceError(str(exc), partition=exc.partition, run=i) from None

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(one, range(runs)))
    else:
        parts = [one(i) for i in range(runs)]
    counts = tuple(p.cluster_count for p in parts)
    mode = count_mode(counts)
    best_run, best_q = -1, -np.inf
    for i, p in enumerate(parts):
        if p.cluster_count != mode:
            continue
        q = modularity(g, p)
        if q > best_q:
            best_run, best_q = i, q
    arr = np.asarray(counts, dtype=float)
    return ClusterConsensus(
        runs=runs,
        counts=counts,
        mode=mode,
        mean=float(arr.mean()),
        std=float(arr.std()),
        representative=parts[best_run],
        representative_run=best_run,
        representative_modularity=float(best_q),
        weighted=weighted,
    )
