import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobitrace.graphs import (
    SnapshotGraph,
    aggregate_graph_metrics,
    build_graph,
    degrees,
    diameter,
    largest_component,
    mean_clustering,
)
from mobitrace.contacts import extract_contacts
from mobitrace.links import analyze_links
from mobitrace.model import Position, Snapshot

from oracles import (
    oracle_clustering,
    oracle_diameter,
    oracle_graph,
    oracle_lcc,
    random_trace,
    trace_from_rows,
)


def graph(nodes, edges):
    return SnapshotGraph(0, frozenset(nodes), frozenset(tuple(sorted(e)) for e in edges))


TRIANGLE = graph("abc", [("a", "b"), ("b", "c"), ("a", "c")])
PATH = graph("ABC", [("A", "B"), ("B", "C")])
STAR = graph("ABC", [("A", "B"), ("A", "C")])


def random_graph(rng, max_nodes=50):
    n = rng.randint(1, max_nodes)
    p = rng.choice([0.02, 0.05, 0.1, 0.3, 0.7])
    nodes = [f"n{i:02d}" for i in range(n)]
    edges = [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:] if rng.random() < p]
    return graph(nodes, edges)


def test_build_graph_examples():
    assert build_graph(Snapshot(0, {}), 10) == graph([], [])
    tri = Snapshot(0, {u: Position(10 + i, 10, 20) for i, u in enumerate("abc")})
    assert len(build_graph(tri, 10).edges) == 3
    # B-C is 13 m apart here, A-C 18 m
    s = Snapshot(0, {"A": Position(10, 10, 20), "B": Position(15, 10, 20), "C": Position(28, 10, 20)})
    assert build_graph(s, 10).edges == {("A", "B")}
    s = Snapshot(0, {"A": Position(10, 10, 20), "B": Position(15, 10, 20), "C": Position(24, 10, 20)})
    assert build_graph(s, 10).edges == {("A", "B"), ("B", "C")}


def test_build_graph_skips_unknown_positions():
    g = build_graph(Snapshot(0, {"a": Position(1, 1, 1), "b": None}), 10)
    assert g.nodes == {"a"}


def test_degrees():
    assert degrees(TRIANGLE) == {"a": 2, "b": 2, "c": 2}
    assert degrees(PATH) == {"A": 1, "B": 2, "C": 1}
    assert degrees(graph("x", [])) == {"x": 0}


def test_largest_component():
    assert largest_component(graph("abcd", [("a", "b"), ("b", "c"), ("a", "c")])) == set("abc")
    assert largest_component(graph("dcba", [("c", "d"), ("a", "b")])) == {"a", "b"}
    assert largest_component(graph([], [])) == set()


def test_diameter():
    assert diameter(graph("a", [])) == 0
    assert diameter(TRIANGLE) == 1
    assert diameter(PATH) == 2
    assert diameter(graph([], [])) is None


def test_clustering():
    assert mean_clustering(TRIANGLE) == 1.0
    assert mean_clustering(STAR) == 0.0
    assert mean_clustering(graph("abcd", [("a", "b"), ("c", "d")])) is None
    assert mean_clustering(graph("abcd", [("a", "b"), ("c", "d")]), zero_for_leaves=True) == 0.0
    assert mean_clustering(PATH, zero_for_leaves=True) == 0.0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_graph_metrics_match_brute_force(seed):
    g = random_graph(random.Random(seed))
    adj = oracle_graph(g.nodes, g.edges)
    assert largest_component(g) == oracle_lcc(adj)
    assert diameter(g) == oracle_diameter(adj)
    assert mean_clustering(g) == oracle_clustering(adj)
    assert mean_clustering(g, True) == oracle_clustering(adj, True)
    deg = degrees(g)
    assert sum(deg.values()) == 2 * len(g.edges)
    lcc = largest_component(g)
    assert diameter(g) <= len(lcc) - 1
    cc = mean_clustering(g)
    assert cc is None or 0 <= cc <= 1


def tri_rows(t):
    return [(t, u, 10.0 + i, 10.0, 20.0) for i, u in enumerate("abc")]


def test_aggregate_two_triangles():
    gm = aggregate_graph_metrics(trace_from_rows(tri_rows(0) + tri_rows(10)), 10)
    assert gm.degree_samples == [2] * 6
    assert gm.diameter_samples == [1, 1]
    assert gm.clustering_samples == [1.0, 1.0]


def test_aggregate_path():
    rows = [(0, "A", 10, 10, 20), (0, "B", 15, 10, 20), (0, "C", 20, 10, 20)]
    gm = aggregate_graph_metrics(trace_from_rows(rows), 6)
    assert sorted(gm.degree_samples) == [1, 1, 2]
    assert gm.diameter_samples == [2]
    assert gm.clustering_samples == [0.0]


def test_aggregate_empty_snapshots_are_counted():
    rows = [(0, "a", 1, 1, 1), (30, "a", 1, 1, 1)]
    gm = aggregate_graph_metrics(trace_from_rows(rows), 10)
    assert gm.diameter_skipped == 2
    assert gm.diameter_samples == [0, 0]
    assert gm.clustering_skipped == 4


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_aggregate_matches_per_snapshot_graphs(seed):
    trace = random_trace(random.Random(seed), max_snaps=20)
    gm = aggregate_graph_metrics(trace, 10)
    expected_deg, expected_diam, expected_cc = [], [], []
    for snap in trace.snapshots:
        g = build_graph(snap, 10)
        if not g.nodes:
            continue
        expected_deg.extend(degrees(g)[u] for u in sorted(g.nodes))
        expected_diam.append(diameter(g))
        cc = mean_clustering(g)
        if cc is not None:
            expected_cc.append(cc)
    assert gm.degree_samples == expected_deg
    assert gm.diameter_samples == expected_diam
    assert gm.clustering_samples == expected_cc


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_degree_monotone_in_range(seed):
    trace = random_trace(random.Random(seed), max_snaps=20)
    small = aggregate_graph_metrics(trace, 10).degree_samples
    wide = aggregate_graph_metrics(trace, 80).degree_samples
    assert np.all(np.array(small) <= np.array(wide))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_single_pass_matches_separate_calls(seed):
    trace = random_trace(random.Random(seed), unknown_rate=0.05)
    links = analyze_links(trace, [10, 80], zero_for_leaves=True)
    for link, r in zip(links, (10, 80)):
        assert link.r == r
        assert link.timelines == extract_contacts(trace, r)
        assert link.graphs == aggregate_graph_metrics(trace, r, zero_for_leaves=True)
