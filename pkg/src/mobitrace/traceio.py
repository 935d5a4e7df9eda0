"""Reading and writing trace files and contact-event exports.

Trace file layout::

    #mobitrace land=<name> extent=<meters> tau=<seconds> [t0=<s> snapshots=<n>]
    t,user,x,y,z
    <int>,<token>,<float>,<float>,<float>
    ...

``t0`` and ``snapshots`` are optional. When present they pin the timeline so
that leading and trailing empty snapshots survive a round trip; ``write_trace``
always emits them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Iterable

import numpy as np

from .model import (
    LandConfig,
    Position,
    Snapshot,
    TraceFormatError,
    TraceSet,
    ValidationError,
)

TRACE_MAGIC = "#mobitrace"
TRACE_COLUMNS = "t,user,x,y,z"
CONTACT_COLUMNS = "u,v,start,end"

DROP_ROW = "drop-row"
KEEP_PRESENT = "keep-as-present-unknown-position"
SIT_POLICIES = (DROP_ROW, KEEP_PRESENT)


@dataclass(frozen=True)
class IngestPolicy:
    sit_policy: str = DROP_ROW
    malformed_limit: int = 100

    def __post_init__(self):
        if self.sit_policy not in SIT_POLICIES:
            raise ValidationError(f"unknown sit policy {self.sit_policy!r}")
        if self.malformed_limit < 0:
            raise ValidationError("malformed_limit must be >= 0")


@dataclass(frozen=True)
class TraceSummary:
    unique_users: int
    mean_concurrency: float
    duration: int
    snapshot_count: int
    malformed_rows: int = 0
    seated_rows: int = 0


def format_number(v) -> str:
    """Shortest fixed-point rendering with at most 6 decimals."""
    v = float(v)
    if v.is_integer():
        return str(int(v))
    return f"{v:.6f}".rstrip("0").rstrip(".")


def format_coord(v) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _parse_header(line):
    if not line.startswith(TRACE_MAGIC + " ") and line != TRACE_MAGIC:
        raise TraceFormatError("missing '#mobitrace' header line")
    fields = {}
    for item in line[len(TRACE_MAGIC):].split():
        key, sep, value = item.partition("=")
        if not sep or not value:
            raise TraceFormatError(f"bad header field {item!r}")
        if key in fields:
            raise TraceFormatError(f"repeated header field {key!r}")
        fields[key] = value
    unknown = set(fields) - {"land", "extent", "tau", "t0", "snapshots"}
    if unknown:
        raise TraceFormatError(f"unknown header fields: {', '.join(sorted(unknown))}")
    for key in ("land", "extent", "tau"):
        if key not in fields:
            raise TraceFormatError(f"header lacks {key}=")
    try:
        land = LandConfig(fields["land"], float(fields["extent"]))
        tau = int(fields["tau"])
        t0 = int(fields["t0"]) if "t0" in fields else None
        count = int(fields["snapshots"]) if "snapshots" in fields else None
    except (ValueError, ValidationError) as exc:
        raise TraceFormatError(f"invalid header: {exc}") from None
    if tau <= 0:
        raise TraceFormatError("tau must be a positive integer")
    if (t0 is None) != (count is None):
        raise TraceFormatError("t0= and snapshots= must appear together")
    if t0 is not None and (t0 < 0 or t0 % tau or count < 0):
        raise TraceFormatError("invalid timeline bounds in header")
    return land, tau, t0, count


def _parse_row(line, extent, tau):
    parts = line.split(",")
    if len(parts) != 5:
        return None
    t_s, user, *coords = parts
    try:
        t = int(t_s)
        x, y, z = (float(c) for c in coords)
    except ValueError:
        return None
    if t < 0 or t % tau or not user or any(c.isspace() for c in user):
        return None
    if not all(math.isfinite(c) for c in (x, y, z)):
        return None
    if not (0 <= x <= extent and 0 <= y <= extent):
        return None
    return t, user, Position(*(float(format(c, ".3f")) for c in (x, y, z)))


def parse_trace(stream: Iterable[str], policy: IngestPolicy | None = None):
    """Parse a trace file into a gapless ``TraceSet`` and its summary.

    Raises ``TraceFormatError`` on a bad header or once the number of
    malformed rows exceeds ``policy.malformed_limit``.
    """
    policy = policy or IngestPolicy()
    lines = iter(stream)
    header = next(lines, None)
    if header is None:
        raise TraceFormatError("empty input")
    land, tau, t0, count = _parse_header(header.rstrip("\r\n"))
    columns = next(lines, None)
    if columns is not None and columns.rstrip("\r\n") != TRACE_COLUMNS:
        raise TraceFormatError(f"expected column line {TRACE_COLUMNS!r}")

    body = list(lines)
    fast = _parse_clean(body, land.extent, tau, t0, count, policy.sit_policy)
    if fast is not None:
        snapshots, seated = fast
        malformed = 0
    else:
        snapshots, malformed, seated = _parse_rows(body, land.extent, tau, t0, count, policy)
    trace = TraceSet(land, tau, snapshots)
    return trace, summarize(trace, malformed, seated)


def _parse_rows(body, extent, tau, t0, count, policy):
    """Row-by-row parse that tolerates and counts malformed rows."""
    malformed = seated = 0
    rows = {}
    for lineno, raw in enumerate(body, start=3):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        row = _parse_row(line, extent, tau)
        if row is not None and t0 is not None and not t0 <= row[0] < t0 + count * tau:
            row = None
        if row is None or (row[0], row[1]) in rows:
            malformed += 1
            if malformed > policy.malformed_limit:
                raise TraceFormatError(
                    f"line {lineno}: more than {policy.malformed_limit} malformed rows"
                )
            continue
        t, user, pos = row
        if pos == (0.0, 0.0, 0.0):
            seated += 1
            pos = None
            if policy.sit_policy == DROP_ROW:
                rows[(t, user)] = _DROPPED
                continue
        rows[(t, user)] = pos

    if t0 is None:
        stamps = [t for t, _ in rows]
        if stamps:
            t0 = min(stamps)
            count = (max(stamps) - t0) // tau + 1
        else:
            t0, count = 0, 0
    buckets = [dict() for _ in range(count)]
    for (t, user), pos in rows.items():
        if pos is not _DROPPED:
            buckets[(t - t0) // tau][user] = pos
    # rows may arrive in any order; store entries sorted by user id
    snapshots = [
        Snapshot(t0 + k * tau, dict(sorted(b.items()))) for k, b in enumerate(buckets)
    ]
    return snapshots, malformed, seated


_make_position = partial(tuple.__new__, Position)


def _parse_clean(body, extent, tau, t0, count, sit_policy):
    """Vectorized parse of a file without blank, malformed or duplicate rows.

    Returns ``(snapshots, seated_rows)``, or None when the file needs the
    row-by-row parser. Accepted files give exactly the row-by-row result.
    """
    text = "".join(body)
    if "\r" in text:
        return None
    if text.endswith("\n"):
        text = text[:-1]
    if not text:
        return None
    n = text.count("\n") + 1
    flat = text.replace("\n", ",").split(",")
    if len(flat) != 5 * n:
        return None
    ts, users = flat[0::5], flat[1::5]
    stamp_chars = "".join(ts)
    if min(map(len, ts)) == 0 or not (stamp_chars.isascii() and stamp_chars.isdigit()):
        return None
    names = sorted(set(users))
    if any(not u or any(c.isspace() for c in u) for u in names):
        return None
    try:
        t = np.fromiter(map(int, ts), np.int64, n)
        xyz = np.column_stack([np.fromiter(map(float, flat[c::5]), float, n) for c in (2, 3, 4)])
    except ValueError:
        return None
    inside = np.isfinite(xyz).all() and (xyz[:, :2] >= 0).all() and (xyz[:, :2] <= extent).all()
    if not inside or (t % tau).any():
        return None
    if t0 is None:
        t0, count = int(t.min()), int((t.max() - t.min()) // tau + 1)
    elif (t < t0).any() or (t >= t0 + count * tau).any():
        return None
    index = {u: i for i, u in enumerate(names)}
    uid = np.fromiter(map(index.__getitem__, users), np.int64, n)
    snap = (t - t0) // tau
    code = snap * len(names) + uid
    if np.unique(code).size != n:
        return None
    # values already at millimeter precision are left alone; the rest get the
    # same decimal rounding as the row parser
    off = np.flatnonzero((np.round(xyz, 3) != xyz).any(axis=1))
    for i in off.tolist():
        xyz[i] = [float(format(c, ".3f")) for c in xyz[i]]
    origin = (xyz == 0).all(axis=1)
    seated = int(origin.sum())
    positions = list(map(_make_position, xyz.tolist()))
    if seated:
        keep = sit_policy != DROP_ROW
        for i in np.flatnonzero(origin).tolist():
            positions[i] = None if keep else _DROPPED
    if (np.diff(code) > 0).all():
        # already in (time, user) order, as written by write_trace
        name_of = users
    else:
        order = np.argsort(code, kind="stable")
        snap = snap[order]
        name_of = [users[i] for i in order.tolist()]
        positions = [positions[i] for i in order.tolist()]
    bounds = np.searchsorted(snap, np.arange(count + 1)).tolist()
    snapshots = []
    for k in range(count):
        lo, hi = bounds[k], bounds[k + 1]
        entries = dict(zip(name_of[lo:hi], positions[lo:hi]))
        if seated and sit_policy == DROP_ROW:
            entries = {u: p for u, p in entries.items() if p is not _DROPPED}
        snapshots.append(Snapshot(t0 + k * tau, entries))
    return snapshots, seated


_DROPPED = object()


def summarize(trace: TraceSet, malformed_rows=0, seated_rows=0) -> TraceSummary:
    n = len(trace.snapshots)
    total = sum(len(s.entries) for s in trace.snapshots)
    return TraceSummary(
        unique_users=len(trace.users()),
        mean_concurrency=total / n if n else 0.0,
        duration=(n - 1) * trace.tau if n else 0,
        snapshot_count=n,
        malformed_rows=malformed_rows,
        seated_rows=seated_rows,
    )


def read_trace(path, policy: IngestPolicy | None = None):
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh, policy)


def write_trace(trace: TraceSet, stream) -> None:
    """Write ``trace``; unknown (seated) positions are written as the origin."""
    t0 = trace.start if trace.snapshots else 0
    stream.write(
        f"{TRACE_MAGIC} land={trace.land.name} extent={format_number(trace.land.extent)} "
        f"tau={trace.tau} t0={t0} snapshots={len(trace.snapshots)}\n"
    )
    stream.write(TRACE_COLUMNS + "\n")
    for s in trace.snapshots:
        for user in sorted(s.entries):
            p = s.entries[user]
            if p is None:
                p = (0.0, 0.0, 0.0)
            stream.write(
                f"{s.t},{user},{format_coord(p[0])},{format_coord(p[1])},{format_coord(p[2])}\n"
            )


def save_trace(trace: TraceSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_trace(trace, fh)


def write_contact_events(contacts, stream) -> None:
    """One ``u,v,start,end`` line per contact, sorted by (start, u, v)."""
    rows = []
    for c in contacts:
        u, v = (c.u, c.v) if c.u < c.v else (c.v, c.u)
        if c.end <= c.start:
            raise ValidationError(f"contact {u},{v} has end <= start")
        rows.append((c.start, u, v, c.end))
    rows.sort()
    stream.write(CONTACT_COLUMNS + "\n")
    for start, u, v, end in rows:
        stream.write(f"{u},{v},{start},{end}\n")


def parse_contact_events(stream):
    """Inverse of ``write_contact_events``; returns ``(u, v, start, end)`` tuples."""
    lines = iter(stream)
    header = next(lines, None)
    if header is None or header.rstrip("\r\n") != CONTACT_COLUMNS:
        raise TraceFormatError(f"expected header {CONTACT_COLUMNS!r}")
    out = []
    for lineno, raw in enumerate(lines, start=2):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        parts = line.split(",")
        try:
            u, v, start, end = parts[0], parts[1], int(parts[2]), int(parts[3])
        except (ValueError, IndexError):
            raise TraceFormatError(f"line {lineno}: malformed contact row") from None
        if len(parts) != 4 or not u < v or end <= start:
            raise TraceFormatError(f"line {lineno}: malformed contact row")
        out.append((u, v, start, end))
    return out
