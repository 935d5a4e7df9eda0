"""Per-snapshot line-of-sight graphs and their aggregated metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import Snapshot, TraceSet, as_range, pairwise_distances


@dataclass(frozen=True)
class SnapshotGraph:
    t: int
    nodes: frozenset
    edges: frozenset  # of (u, v) tuples with u < v

    def adjacency(self):
        order = sorted(self.nodes)
        index = {u: i for i, u in enumerate(order)}
        adj = np.zeros((len(order), len(order)), dtype=bool)
        for u, v in self.edges:
            adj[index[u], index[v]] = adj[index[v], index[u]] = True
        return order, adj


def build_graph(snapshot: Snapshot, r, planar=False) -> SnapshotGraph:
    r = as_range(r)
    known = snapshot.known()
    order = sorted(known)
    edges = set()
    if len(order) >= 2:
        xyz = np.array([known[u] for u in order], dtype=float)
        adj = pairwise_distances(xyz, planar) < r
        a, b = np.nonzero(np.triu(adj, 1))
        edges = {(order[i], order[j]) for i, j in zip(a.tolist(), b.tolist())}
    return SnapshotGraph(snapshot.t, frozenset(order), frozenset(edges))


def degrees(g: SnapshotGraph):
    deg = dict.fromkeys(g.nodes, 0)
    for u, v in g.edges:
        deg[u] += 1
        deg[v] += 1
    return deg


# adjacency-matrix kernels over stacks of shape (..., m, m); node order is
# assumed to be sorted by id


def _expand(adj):
    """Breadth-first expansion from every node at once.

    Returns ``(labels, ecc)``: the smallest node index of each node's
    component, and each node's eccentricity (the steps during which its
    reachable set still grew).
    """
    m = adj.shape[-1]
    step = adj.astype(np.float32) + np.eye(m, dtype=np.float32)
    ones = np.ones(m, dtype=np.float32)
    reach = step
    covered = reach @ ones
    ecc = (covered > 1).astype(np.int64)
    while m > 1:
        reach = np.minimum(reach @ step, 1.0, out=np.empty_like(reach))
        now = reach @ ones
        grew = now > covered
        if not grew.any():
            break
        ecc += grew
        covered = now
    return np.argmax(reach > 0, axis=-1), ecc


def _largest(labels):
    """Mask of the largest component; among tied components the one holding
    the smallest index wins."""
    m = labels.shape[-1]
    sizes = (labels[..., :, None] == np.arange(m)).sum(axis=-2)
    return labels == np.argmax(sizes, axis=-1)[..., None]


def _diameters(adj):
    labels, ecc = _expand(adj)
    return np.where(_largest(labels), ecc, 0).max(axis=-1)


def _clustering(adj, zero_for_leaves=False):
    """Mean local clustering of each graph in the stack, None where no node
    is eligible."""
    deg = adj.sum(axis=-1)
    eligible = deg >= (0 if zero_for_leaves else 2)
    # twice the triangle count through each node; the float32 products are
    # exact path counts (at most m) and the sums are taken in float64
    a = adj.astype(np.float32)
    closed = ((a @ a) * a).sum(axis=-1, dtype=np.float64)
    pairs = deg * (deg - 1.0)
    local = np.divide(closed, pairs, out=np.zeros_like(closed), where=pairs > 0)
    out = []
    for values, ok in zip(local, eligible):
        count = int(ok.sum())
        out.append(math.fsum(values[ok].tolist()) / count if count else None)
    return out


def largest_component(g: SnapshotGraph):
    order, adj = g.adjacency()
    if not order:
        return set()
    members = _largest(_expand(adj)[0])
    return {order[i] for i in np.flatnonzero(members).tolist()}


def diameter(g: SnapshotGraph) -> Optional[int]:
    """Longest shortest path (in hops) inside the largest component, or None
    for an empty graph."""
    order, adj = g.adjacency()
    if not order:
        return None
    return int(_diameters(adj))


def mean_clustering(g: SnapshotGraph, zero_for_leaves=False) -> Optional[float]:
    """Mean local clustering coefficient.

    Nodes with fewer than two neighbours are left out unless
    ``zero_for_leaves`` is set, in which case they count as 0. Returns None
    when no node is eligible.
    """
    _, adj = g.adjacency()
    if adj.shape[0] == 0:
        return None
    return _clustering(adj[None], zero_for_leaves)[0]


@dataclass(frozen=True)
class SnapshotMetrics:
    t: int
    nodes: int
    edges: int
    diameter: Optional[int]
    clustering: Optional[float]


@dataclass
class GraphMetrics:
    records: list = field(default_factory=list)
    degree_samples: list = field(default_factory=list)
    diameter_samples: list = field(default_factory=list)
    clustering_samples: list = field(default_factory=list)
    diameter_skipped: int = 0
    clustering_skipped: int = 0


class GraphBuilder:
    """Accumulates per-snapshot graph metrics from distance batches (see
    ``IndexedTrace.batches``)."""

    def __init__(self, trace: TraceSet, r, zero_for_leaves=False):
        self.trace = trace
        self.r = as_range(r)
        self.zero_for_leaves = zero_for_leaves
        ix = trace.indexed
        n_snap = len(trace.snapshots)
        self._edges = np.zeros(n_snap, dtype=np.int64)
        self._diam = [None] * n_snap
        self._cc = [None] * n_snap
        self._deg = np.zeros(ix.entry_user.size, dtype=np.int64)

    def add(self, groups):
        offsets = self.trace.indexed.offsets
        for ks, _, dist in groups:
            m = dist.shape[-1]
            if m == 0:
                continue
            adj = dist < self.r
            adj[:, np.arange(m), np.arange(m)] = False
            deg = adj.sum(axis=-1)
            self._deg[offsets[ks][:, None] + np.arange(m)] = deg
            self._edges[ks] = deg.sum(axis=-1) // 2
            diam = _diameters(adj).tolist()
            cc = _clustering(adj, self.zero_for_leaves)
            for k, d, c in zip(ks.tolist(), diam, cc):
                self._diam[k], self._cc[k] = d, c

    def finish(self) -> "GraphMetrics":
        nodes = np.diff(self.trace.indexed.offsets).tolist()
        out = GraphMetrics(degree_samples=self._deg.tolist())
        for k, s in enumerate(self.trace.snapshots):
            d, c = self._diam[k], self._cc[k]
            out.records.append(SnapshotMetrics(s.t, nodes[k], int(self._edges[k]), d, c))
            if d is None:
                out.diameter_skipped += 1
            else:
                out.diameter_samples.append(d)
            if c is None:
                out.clustering_skipped += 1
            else:
                out.clustering_samples.append(c)
        return out


def aggregate_graph_metrics(trace: TraceSet, r, planar=False, zero_for_leaves=False):
    """Graph metrics for every snapshot, pooled over the whole trace.

    Degree samples are pooled over (snapshot, node) pairs; diameter and
    clustering contribute one sample per snapshot where they are defined.
    """
    builder = GraphBuilder(trace, r, zero_for_leaves)
    for groups in trace.indexed.batches(planar):
        builder.add(groups)
    return builder.finish()
