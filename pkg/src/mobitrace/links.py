"""Contacts and graph metrics for several ranges in one pass over the trace."""

from __future__ import annotations

from dataclasses import dataclass

from .contacts import ContactBuilder
from .graphs import GraphBuilder, GraphMetrics
from .model import TraceSet


@dataclass(frozen=True)
class LinkAnalysis:
    r: float
    timelines: list
    graphs: GraphMetrics


def analyze_links(trace: TraceSet, ranges, planar=False, zero_for_leaves=False):
    """Contact timelines and graph metrics for each range in ``ranges``.

    Equivalent to calling ``extract_contacts`` and ``aggregate_graph_metrics``
    per range, but pairwise distances are computed once per snapshot.
    """
    builders = [(ContactBuilder(trace, r), GraphBuilder(trace, r, zero_for_leaves)) for r in ranges]
    for groups in trace.indexed.batches(planar):
        for cb, gb in builders:
            cb.add(groups)
            gb.add(groups)
    return [LinkAnalysis(cb.r, cb.finish(), gb.finish()) for cb, gb in builders]
