"""Wall-clock timing of ``mobitrace analyze`` on 24 h traces.

Two workloads: the default points-of-interest trace, where a few users are
online at once, and a random-waypoint trace with every user online for the
whole day, which is the dense worst case.

    python scripts/throughput_benchmark.py --rwp-users 100
"""

import argparse
import io
import os
import tempfile
import time

from mobitrace.cli import run
from mobitrace.synth import PoiModelConfig, RwpModelConfig, format_model_config


def bench(name, cfg, workdir):
    cfg_path = os.path.join(workdir, f"{name}.cfg")
    trace_path = os.path.join(workdir, f"{name}.csv")
    with open(cfg_path, "w") as fh:
        fh.write(format_model_config(cfg))
    t = time.perf_counter()
    assert run(["generate", "--model-config", cfg_path, "--output", trace_path], io.StringIO()) == 0
    generated = time.perf_counter() - t
    out = io.StringIO()
    t = time.perf_counter()
    assert run(["analyze", "--input", trace_path, "--out-dir", os.path.join(workdir, name)], out) == 0
    analyzed = time.perf_counter() - t
    print(f"{name}: generate {generated:.2f} s, analyze (10 m and 80 m) {analyzed:.2f} s")
    for line in out.getvalue().splitlines():
        print(f"  {line}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rwp-users", type=int, default=100)
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as workdir:
        bench("poi", PoiModelConfig(seed=args.seed), workdir)
        if args.rwp_users:
            bench(f"rwp-{args.rwp_users}", RwpModelConfig(user_count=args.rwp_users, seed=args.seed), workdir)


if __name__ == "__main__":
    main()
