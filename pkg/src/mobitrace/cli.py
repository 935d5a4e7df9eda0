"""Command-line driver.

Exit codes: 0 success, 1 validation error (bad arguments, missing files,
invalid config values, nothing to analyze), 2 format error (unparseable
trace or config file).
"""

from __future__ import annotations

import argparse
import gc
import os
import sys
from contextlib import contextmanager
from dataclasses import asdict

from . import contacts as ca
from .links import analyze_links
from .model import BLUETOOTH_RANGE, WIFI_RANGE, RadioRange, TraceFormatError, ValidationError
from .spatial import DEFAULT_PAUSE_EPSILON, GridSpec, per_user_totals, trip_records, write_grid, zone_occupation
from .stats import EmpiricalDistribution, write_distribution
from .synth import PoiModelConfig, generate_poi, generate_rwp, parse_model_config, with_seed
from .traceio import (
    DROP_ROW,
    SIT_POLICIES,
    IngestPolicy,
    format_number,
    read_trace,
    save_trace,
    write_contact_events,
)

COMMANDS = ("summary", "analyze", "generate", "export-contacts", "heatmap")


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="mobitrace", description="Contact and mobility analytics for position traces.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", help="trace file")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument("--output", help="trace file written by 'generate' (default <out-dir>/trace.csv)")
    p.add_argument("--range", dest="ranges", type=float, action="append", default=[],
                   metavar="M", help="radio range in meters (repeatable)")
    p.add_argument("--bluetooth", action="store_true", help=f"add the {BLUETOOTH_RANGE:g} m range")
    p.add_argument("--wifi", action="store_true", help=f"add the {WIFI_RANGE:g} m range")
    cens = p.add_mutually_exclusive_group()
    cens.add_argument("--include-censored", dest="censor", action="store_const",
                      const=ca.INCLUDE, default=ca.INCLUDE,
                      help="keep contacts cut by the trace bounds or a logout (default)")
    cens.add_argument("--exclude-censored", dest="censor", action="store_const",
                      const=ca.EXCLUDE_CENSORED, help="drop censored contacts from contact times")
    p.add_argument("--gap-tolerance", type=int, default=0, metavar="N",
                   help="absent snapshots bridged inside one session")
    p.add_argument("--pause-epsilon", type=float, default=DEFAULT_PAUSE_EPSILON, metavar="M",
                   help="per-step displacement below which a user counts as paused")
    p.add_argument("--grid-l", type=float, default=20.0, metavar="M", help="heatmap cell size")
    p.add_argument("--2d", dest="planar", action="store_true", help="ignore z in distances")
    p.add_argument("--teleport-cutoff", type=float, default=None, metavar="M",
                   help="drop trip steps longer than M per tau")
    p.add_argument("--cc-zero-for-leaves", action="store_true",
                   help="count nodes of degree < 2 as clustering 0 instead of skipping them")
    p.add_argument("--model-config", help="key=value model config for 'generate'")
    p.add_argument("--seed", type=int, default=None, help="override the model seed")
    p.add_argument("--sit-policy", choices=SIT_POLICIES, default=DROP_ROW,
                   help="handling of (0,0,0) rows of seated users")
    p.add_argument("--malformed-limit", type=int, default=100, metavar="N",
                   help="malformed rows tolerated before the parse fails")
    return p


def _ranges(args):
    values = list(args.ranges)
    if args.bluetooth:
        values.append(BLUETOOTH_RANGE)
    if args.wifi:
        values.append(WIFI_RANGE)
    if not values:
        values = [BLUETOOTH_RANGE, WIFI_RANGE]
    seen, out = set(), []
    for v in values:
        rr = RadioRange(v)
        if rr.r not in seen:
            seen.add(rr.r)
            out.append(rr)
    return out


def _load(args):
    if not args.input:
        raise UsageError("--input is required")
    if not os.path.isfile(args.input):
        raise UsageError(f"input file not found: {args.input}")
    policy = IngestPolicy(args.sit_policy, args.malformed_limit)
    return read_trace(args.input, policy)


def _write(path, writer, *payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer(*payload, fh)


def _write_metric(out_dir, name, samples, kind, warn):
    d = EmpiricalDistribution(samples, name)
    path = os.path.join(out_dir, f"{name}.csv")
    if len(d):
        _write(path, lambda fh: write_distribution(d, fh, kind))
    else:
        warn(f"warning: no samples for {name}; wrote header only")
        _write(path, lambda fh: fh.write(f"value,{kind}\n"))
    return path


def cmd_summary(args, out, warn):
    _, summary = _load(args)
    for key, value in asdict(summary).items():
        out(f"{key}={format_number(value)}")
    return 0


def cmd_analyze(args, out, warn):
    trace, _ = _load(args)
    sessions = ca.extract_sessions(trace, args.gap_tolerance)
    if not sessions:
        raise ValidationError("no samples: the trace has no users")
    if args.pause_epsilon < 0:
        raise ValidationError("--pause-epsilon must be >= 0")
    os.makedirs(args.out_dir, exist_ok=True)
    ranges = _ranges(args)
    written = []
    links = analyze_links(trace, [rr.r for rr in ranges], args.planar, args.cc_zero_for_leaves)
    for rr, link in zip(ranges, links):
        tag = f"r{rr.label}"
        timelines, gm = link.timelines, link.graphs
        ft, never = ca.first_contact_times(trace, timelines, sessions)
        metrics = [
            ("ct", ca.contact_times(timelines, args.censor), "ccdf"),
            ("ict", ca.inter_contact_times(timelines), "ccdf"),
            ("ft", list(ft.values()), "ccdf"),
            ("degree", gm.degree_samples, "ccdf"),
            ("diameter", gm.diameter_samples, "cdf"),
            ("clustering", gm.clustering_samples, "cdf"),
        ]
        for name, samples, kind in metrics:
            written.append(_write_metric(args.out_dir, f"{name}-{tag}", samples, kind, warn))
        out(f"{tag}: contacts={sum(len(t.contacts) for t in timelines)} "
            f"never_contacted={never} empty_snapshots={gm.diameter_skipped}")
    totals = per_user_totals(trip_records(
        trace, sessions, args.pause_epsilon, args.planar, args.teleport_cutoff))
    for pos, name in enumerate(("travel-length", "effective-travel-time", "travel-time")):
        samples = [t[pos] for t in totals.values()]
        written.append(_write_metric(args.out_dir, name, samples, "cdf", warn))
    out(f"wrote {len(written)} files to {args.out_dir}")
    return 0


def cmd_heatmap(args, out, warn):
    trace, _ = _load(args)
    spec = GridSpec(args.grid_l, trace.land.extent)
    grid = zone_occupation(trace, spec)
    os.makedirs(args.out_dir, exist_ok=True)
    _write(os.path.join(args.out_dir, "heatmap-mean.csv"),
           lambda fh: write_grid(grid.mean_occupancy, spec, fh))
    _write(os.path.join(args.out_dir, "heatmap-peak.csv"),
           lambda fh: write_grid(grid.peak_occupancy, spec, fh, integer=True))
    out(f"wrote {spec.cells}x{spec.cells} grid to {args.out_dir}")
    return 0


def cmd_generate(args, out, warn):
    if args.model_config:
        if not os.path.isfile(args.model_config):
            raise UsageError(f"model config not found: {args.model_config}")
        with open(args.model_config, encoding="utf-8") as fh:
            cfg = parse_model_config(fh.read())
    else:
        cfg = PoiModelConfig()
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    trace = generate_poi(cfg) if isinstance(cfg, PoiModelConfig) else generate_rwp(cfg)
    path = args.output or os.path.join(args.out_dir, "trace.csv")
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    save_trace(trace, path)
    out(f"wrote {len(trace.snapshots)} snapshots, {len(trace.users())} users to {path}")
    return 0


def cmd_export_contacts(args, out, warn):
    trace, _ = _load(args)
    os.makedirs(args.out_dir, exist_ok=True)
    for rr in _ranges(args):
        timelines = ca.extract_contacts(trace, rr.r, args.planar)
        path = os.path.join(args.out_dir, f"contacts-r{rr.label}.csv")
        _write(path, write_contact_events, list(ca.iter_contacts(timelines)))
        out(f"wrote {path}")
    return 0


HANDLERS = {
    "summary": cmd_summary,
    "analyze": cmd_analyze,
    "generate": cmd_generate,
    "export-contacts": cmd_export_contacts,
    "heatmap": cmd_heatmap,
}


@contextmanager
def _gc_paused():
    # the analyses allocate millions of small acyclic objects; cyclic
    # collection passes over them only cost time
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr

    def out(line):
        print(line, file=stdout)

    def warn(line):
        print(line, file=stderr)

    try:
        args = build_parser().parse_args(argv)
        if args.gap_tolerance < 0:
            raise UsageError("--gap-tolerance must be >= 0")
        with _gc_paused():
            return HANDLERS[args.command](args, out, warn)
    except TraceFormatError as exc:
        warn(f"mobitrace: format error: {exc}")
        return 2
    except ValidationError as exc:
        warn(f"mobitrace: error: {exc}")
        return 1
    except OSError as exc:
        warn(f"mobitrace: error: {exc}")
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
