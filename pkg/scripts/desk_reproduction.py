"""Seed sweep of the default points-of-interest model.

For each seed, prints the hotspot share of user-time, the fraction of
sessions under one hour and the median contact time at 10 m and 80 m.

    python scripts/desk_reproduction.py --seeds 8
"""

import argparse
import time

from mobitrace.contacts import contact_times, extract_contacts, extract_sessions
from mobitrace.spatial import hotspot_share, zone_occupation
from mobitrace.stats import EmpiricalDistribution
from mobitrace.synth import PoiModelConfig, generate_poi


def measure(seed):
    trace = generate_poi(PoiModelConfig(seed=seed))
    sessions = [s for ss in extract_sessions(trace).values() for s in ss]
    medians = [
        EmpiricalDistribution(contact_times(extract_contacts(trace, r))).median()
        for r in (10, 80)
    ]
    return {
        "users": len(trace.users()),
        "sessions": len(sessions),
        "share": hotspot_share(zone_occupation(trace)),
        "short": sum(s.duration < 3600 for s in sessions) / len(sessions),
        "ct10": medians[0],
        "ct80": medians[1],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=8)
    args = ap.parse_args()
    print("seed users sessions share  <1h    ct10  ct80  ok   seconds")
    for seed in range(args.seeds):
        t = time.perf_counter()
        m = measure(seed)
        ok = m["share"] >= 0.5 and m["short"] >= 0.85 and m["ct80"] > m["ct10"]
        print(f"{seed:4d} {m['users']:5d} {m['sessions']:8d} {m['share']:.3f} {m['short']:.3f} "
              f"{m['ct10']:5g} {m['ct80']:5g} {'yes' if ok else 'NO':4s} {time.perf_counter() - t:.2f}")


if __name__ == "__main__":
    main()
