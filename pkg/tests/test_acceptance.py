"""Exit criteria for the toolkit, one test per criterion.

The measured virtual-world traces are not available, so these criteria are
checked against brute-force oracles and against synthetic traces from the
points-of-interest generator.
"""

import io
import os
import random
import time

import numpy as np
import pytest

from mobitrace.cli import run
from mobitrace.contacts import contact_times, extract_contacts, extract_sessions, inter_contact_times
from mobitrace.graphs import aggregate_graph_metrics, diameter, mean_clustering
from mobitrace.model import BLUETOOTH_RANGE, WIFI_RANGE
from mobitrace.spatial import hotspot_share, zone_occupation
from mobitrace.stats import EmpiricalDistribution, parse_distribution
from mobitrace.synth import PoiModelConfig, RwpModelConfig, generate_poi, generate_rwp
from mobitrace.traceio import parse_contact_events, parse_trace, write_contact_events, write_trace

from oracles import (
    copresence_runs,
    oracle_clustering,
    oracle_contacts,
    oracle_diameter,
    oracle_graph,
    random_trace,
)
from test_graphs import PATH, STAR, TRIANGLE, random_graph

pytestmark = pytest.mark.acceptance

FUZZ_CASES = 200


@pytest.fixture(scope="module")
def fuzz_traces():
    rng = random.Random(20081)
    return [random_trace(rng, max_users=10, max_snaps=100, tau=10, unknown_rate=0.03)
            for _ in range(FUZZ_CASES)]


def as_dict(timelines):
    return {
        (tl.u, tl.v): [(c.start, c.end, c.left_censored, c.right_censored) for c in tl.contacts]
        for tl in timelines
    }


def dump(trace):
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def test_1_contact_oracle(fuzz_traces, report):
    elapsed, mismatches = 0.0, 0
    for trace in fuzz_traces:
        for r in (BLUETOOTH_RANGE, WIFI_RANGE):
            t = time.perf_counter()
            got = extract_contacts(trace, r)
            elapsed += time.perf_counter() - t
            if as_dict(got) != oracle_contacts(trace, r):
                mismatches += 1
    ok = mismatches == 0 and elapsed < 5.0
    report("1 contact oracle", ok, f"{mismatches} mismatches over {FUZZ_CASES} traces x 2 ranges, "
           f"{elapsed:.2f} s (limit 5 s)")
    assert ok


def test_2_tiling_identity(fuzz_traces, report):
    failures = checked = 0
    for trace in fuzz_traces:
        tau = trace.tau
        for tl in extract_contacts(trace, BLUETOOTH_RANGE):
            checked += 1
            span = tl.contacts[-1].end - tl.contacts[0].start
            if sum(contact_times([tl])) + sum(inter_contact_times([tl])) != span:
                failures += 1
            # within each co-presence run, contact time plus co-present time
            # out of range covers the run exactly
            for a, b in copresence_runs(trace, tl.u, tl.v):
                inside = [c for c in tl.contacts if a <= c.start < b]
                apart = sum(
                    tau for t in range(a, b, tau)
                    if not any(c.start <= t < c.end for c in inside)
                )
                if sum(c.duration for c in inside) + apart != b - a:
                    failures += 1
                if inside:
                    gaps = sum(y.start - x.end for x, y in zip(inside, inside[1:]))
                    lead, tail = inside[0].start - a, b - inside[-1].end
                    if sum(c.duration for c in inside) + gaps + lead + tail != b - a:
                        failures += 1
    report("2 tiling identity", failures == 0, f"{checked} pairs, {failures} failures")
    assert failures == 0


def test_3_range_monotonicity(fuzz_traces, report):
    failures = 0
    for trace in fuzz_traces:
        ct_small = sum(contact_times(extract_contacts(trace, BLUETOOTH_RANGE)))
        ct_wide = sum(contact_times(extract_contacts(trace, WIFI_RANGE)))
        if ct_wide < ct_small:
            failures += 1
        small = aggregate_graph_metrics(trace, BLUETOOTH_RANGE).degree_samples
        wide = aggregate_graph_metrics(trace, WIFI_RANGE).degree_samples
        if len(small) != len(wide) or np.any(np.array(small) > np.array(wide)):
            failures += 1
    report("3 range monotonicity", failures == 0, f"{failures} violations over {FUZZ_CASES} traces")
    assert failures == 0


def test_4_graph_oracle(report):
    rng = random.Random(1998)
    mismatches = 0
    for _ in range(100):
        g = random_graph(rng, max_nodes=50)
        adj = oracle_graph(g.nodes, g.edges)
        if diameter(g) != oracle_diameter(adj) or mean_clustering(g) != oracle_clustering(adj):
            mismatches += 1
    hand = (diameter(TRIANGLE) == 1 and mean_clustering(TRIANGLE) == 1.0
            and mean_clustering(STAR) == 0.0 and diameter(PATH) == 2)
    ok = mismatches == 0 and hand
    report("4 graph oracle", ok, f"{mismatches} mismatches on 100 graphs, hand fixtures {'ok' if hand else 'FAILED'}")
    assert ok


def test_5_distributions(report):
    rng = random.Random(5)
    worst, monotone = 0.0, True
    for _ in range(200):
        xs = [rng.choice([rng.randint(0, 20), rng.expovariate(0.01)]) for _ in range(rng.randint(1, 80))]
        d = EmpiricalDistribution(xs)
        for (_, p), (_, q) in zip(d.cdf(), d.ccdf()):
            worst = max(worst, abs(p + q - 1))
        qs = sorted(rng.random() for _ in range(20)) + [1.0]
        vals = [d.quantile(q) for q in qs]
        monotone &= vals == sorted(vals)
    d = EmpiricalDistribution([1, 2, 2, 5])
    fixtures = d.ccdf_at(2) == 0.25 and d.cdf_at(2) == 0.75 and d.quantile(0.9) == 5
    ok = worst <= 1e-12 and monotone and fixtures
    report("5 distributions", ok, f"max |cdf+ccdf-1| = {worst:.1e}, quantiles monotone={monotone}, "
           f"fixtures={'ok' if fixtures else 'FAILED'}")
    assert ok


def test_6_round_trip(report):
    failures = 0
    for seed in range(100):
        if seed % 2:
            trace = generate_poi(PoiModelConfig(duration=3600, user_arrival_rate=1 / 60, seed=seed))
        else:
            trace = generate_rwp(RwpModelConfig(duration=600, user_count=1 + seed % 12, seed=seed))
        text = dump(trace)
        again, _ = parse_trace(io.StringIO(text))
        if again != trace or dump(again) != text:
            failures += 1
        contacts = [c for tl in extract_contacts(trace, WIFI_RANGE) for c in tl.contacts]
        buf = io.StringIO()
        write_contact_events(contacts, buf)
        parsed = parse_contact_events(io.StringIO(buf.getvalue()))
        if sorted(parsed) != sorted((c.u, c.v, c.start, c.end) for c in contacts):
            failures += 1
    report("6 round trip", failures == 0, f"{failures} failures over 100 generated traces")
    assert failures == 0


def test_7_determinism(report):
    same = all(
        dump(make(seed)) == dump(make(seed))
        for seed in (0, 1, 42)
        for make in (lambda s: generate_poi(PoiModelConfig(seed=s)),
                     lambda s: generate_rwp(RwpModelConfig(duration=3600, user_count=20, seed=s)))
    )
    report("7 determinism", same, "byte-identical traces for repeated seeds")
    assert same


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    """Generate the default 24 h points-of-interest trace and analyze it at
    both ranges through the command line."""
    d = tmp_path_factory.mktemp("desk")
    trace_path, out_dir = str(d / "trace.csv"), str(d / "out")
    t0 = time.perf_counter()
    assert run(["generate", "--output", trace_path], io.StringIO(), io.StringIO()) == 0
    t1 = time.perf_counter()
    err = io.StringIO()
    code = run(["analyze", "--input", trace_path, "--out-dir", out_dir, "--bluetooth", "--wifi"],
               io.StringIO(), err)
    t2 = time.perf_counter()
    assert code == 0, err.getvalue()
    return {"trace": trace_path, "out": out_dir, "generate_s": t1 - t0, "analyze_s": t2 - t1}


def test_8_qualitative_reproduction(desk_run, report):
    with open(desk_run["trace"]) as fh:
        trace, summary = parse_trace(fh)
    share = hotspot_share(zone_occupation(trace), 0.1)
    sessions = [s for ss in extract_sessions(trace).values() for s in ss]
    short = sum(s.duration < 3600 for s in sessions) / len(sessions)

    def median_ct(r):
        with open(os.path.join(desk_run["out"], f"ct-r{r}.csv")) as fh:
            _, points = parse_distribution(fh)
        # lower median read off the ccdf: first value where P(X > x) <= 0.5
        return next(v for v, p in points if p <= 0.5)

    med10, med80 = median_ct(10), median_ct(80)
    direct = (EmpiricalDistribution(contact_times(extract_contacts(trace, 10))).median(),
              EmpiricalDistribution(contact_times(extract_contacts(trace, 80))).median())
    pipeline = desk_run["generate_s"] + desk_run["analyze_s"]
    checks = {
        "a": share >= 0.5,
        "b": short >= 0.85,
        "c": med80 > med10 and (med10, med80) == direct,
        "time": pipeline < 60,
    }
    report("8a hotspot concentration", checks["a"], f"top 10% of occupied cells hold {share:.1%} of user-time (need >= 50%)")
    report("8b short sessions", checks["b"], f"{short:.1%} of {len(sessions)} sessions < 1 h (need >= 85%)")
    report("8c contact time ordering", checks["c"], f"median CT {med10:g} s at 10 m < {med80:g} s at 80 m")
    report("8 pipeline time", checks["time"], f"generate + analyze {pipeline:.1f} s (limit 60 s); "
           f"{summary.snapshot_count} snapshots, {summary.unique_users} users")
    assert summary.snapshot_count == 8640
    assert all(checks.values())


def test_9_throughput(desk_run, report):
    with open(desk_run["trace"]) as fh:
        _, summary = parse_trace(fh)
    elapsed = desk_run["analyze_s"]
    ok = elapsed < 10 and summary.snapshot_count == 8640
    report("9 throughput", ok, f"analyze of the default 24 h trace ({summary.snapshot_count} snapshots, "
           f"{summary.unique_users} users), all metrics at 10 m and 80 m, in {elapsed:.1f} s (limit 10 s)")
    assert ok
