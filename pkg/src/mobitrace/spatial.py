"""Trip metrics and zone occupation over a square grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TraceFormatError, TraceSet, ValidationError
from .traceio import format_number

DEFAULT_CELL = 20.0
DEFAULT_PAUSE_EPSILON = 0.5


@dataclass(frozen=True)
class GridSpec:
    cell_size: float = DEFAULT_CELL
    extent: float = 256.0

    def __post_init__(self):
        if not 0 < self.cell_size <= self.extent:
            raise ValidationError(
                f"cell size must be in (0, extent], got {self.cell_size} for extent {self.extent}"
            )

    @property
    def cells(self) -> int:
        return math.ceil(self.extent / self.cell_size)


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    spec: GridSpec
    mean_occupancy: np.ndarray  # [y_cell, x_cell]
    peak_occupancy: np.ndarray


@dataclass(frozen=True)
class TripRecord:
    user: str
    session: object
    travel_length: float
    effective_travel_time: int
    travel_time: int


def _steps(trace, session, planar=False, teleport_cutoff=None):
    """(duration, displacement) for each pair of successive known positions
    inside the session.

    Steps longer than ``teleport_cutoff`` meters per tau are dropped.
    """
    ix = trace.indexed
    try:
        i = ix.users.index(session.user)
    except ValueError:
        raise ValidationError(f"user {session.user!r} is not in the trace") from None
    snaps, xyz = ix.track(i)
    t = ix.times[snaps]
    sel = (t >= session.start) & (t < session.end)
    t, xyz = t[sel], xyz[sel]
    if t.size < 2:
        return np.empty(0, dtype=np.int64), np.empty(0)
    d = np.diff(xyz, axis=0)
    s = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
    if not planar:
        s = s + d[:, 2] * d[:, 2]
    dt, disp = np.diff(t), np.sqrt(s)
    if teleport_cutoff is not None:
        keep = disp / (dt / trace.tau) <= teleport_cutoff
        dt, disp = dt[keep], disp[keep]
    return dt, disp


def travel_length(trace: TraceSet, session, planar=False, teleport_cutoff=None) -> float:
    """Cumulative path length over the session's successive known positions."""
    _, disp = _steps(trace, session, planar, teleport_cutoff)
    return math.fsum(disp.tolist())


def effective_travel_time(
    trace: TraceSet, session, pause_epsilon=DEFAULT_PAUSE_EPSILON, planar=False,
    teleport_cutoff=None,
) -> int:
    """Time spent in steps whose displacement exceeds ``pause_epsilon``."""
    if pause_epsilon < 0:
        raise ValidationError("pause_epsilon must be >= 0")
    dt, disp = _steps(trace, session, planar, teleport_cutoff)
    return int(dt[disp > pause_epsilon].sum())


def travel_time(sessions) -> int:
    return sum(s.end - s.start for s in sessions)


def trip_records(trace, sessions, pause_epsilon=DEFAULT_PAUSE_EPSILON, planar=False,
                 teleport_cutoff=None):
    """One TripRecord per session, ordered by user then start."""
    out = []
    for user in sorted(sessions):
        for s in sessions[user]:
            dt, disp = _steps(trace, s, planar, teleport_cutoff)
            out.append(TripRecord(
                user, s,
                travel_length=math.fsum(disp.tolist()),
                effective_travel_time=int(dt[disp > pause_epsilon].sum()),
                travel_time=s.end - s.start,
            ))
    return out


def per_user_totals(records):
    """Sum trip records per user: {user: (length, effective_time, travel_time)}."""
    totals = {}
    for rec in records:
        length, eff, tt = totals.get(rec.user, (0.0, 0, 0))
        totals[rec.user] = (length + rec.travel_length, eff + rec.effective_travel_time,
                            tt + rec.travel_time)
    return totals


def cell_of(x, y, spec: GridSpec):
    last = spec.cells - 1
    return min(int(x // spec.cell_size), last), min(int(y // spec.cell_size), last)


def zone_occupation(trace: TraceSet, spec: GridSpec | None = None) -> OccupancyGrid:
    spec = spec or GridSpec(extent=trace.land.extent)
    if spec.extent != trace.land.extent:
        raise ValidationError("grid extent does not match the land extent")
    n = spec.cells
    ix = trace.indexed
    n_snap = len(trace.snapshots)
    mean = np.zeros((n, n))
    peak = np.zeros((n, n), dtype=np.int64)
    if ix.entry_xyz.shape[0] and n_snap:
        cx = np.minimum((ix.entry_xyz[:, 0] // spec.cell_size).astype(np.int64), n - 1)
        cy = np.minimum((ix.entry_xyz[:, 1] // spec.cell_size).astype(np.int64), n - 1)
        cell = cy * n + cx
        keys, counts = np.unique(ix.entry_snap * (n * n) + cell, return_counts=True)
        flat_peak = np.zeros(n * n, dtype=np.int64)
        np.maximum.at(flat_peak, keys % (n * n), counts)
        peak = flat_peak.reshape(n, n)
        mean = (np.bincount(cell, minlength=n * n) / n_snap).reshape(n, n)
    return OccupancyGrid(spec, mean, peak)


def hotspot_share(grid: OccupancyGrid, top_fraction=0.1) -> float:
    """Share of total user-time held by the busiest ``top_fraction`` of
    occupied cells (at least one cell)."""
    occ = np.sort(grid.mean_occupancy[grid.mean_occupancy > 0])[::-1]
    if occ.size == 0:
        return 0.0
    top = max(1, math.ceil(top_fraction * occ.size))
    return float(occ[:top].sum() / occ.sum())


def write_grid(values, spec: GridSpec, stream, integer=False) -> None:
    n = spec.cells
    stream.write(
        f"#grid extent={format_number(spec.extent)} L={format_number(spec.cell_size)} "
        f"rows={n} cols={n}\n"
    )
    for row in np.asarray(values):
        if integer:
            stream.write(",".join(str(int(v)) for v in row) + "\n")
        else:
            stream.write(",".join(f"{v:.6f}" for v in row) + "\n")


def parse_grid(stream):
    """Read a grid file back; returns ``(GridSpec, matrix)``."""
    lines = [ln.rstrip("\r\n") for ln in stream if ln.strip()]
    if not lines or not lines[0].startswith("#grid "):
        raise TraceFormatError("missing '#grid' header")
    try:
        fields = dict(item.split("=", 1) for item in lines[0][6:].split())
        spec = GridSpec(float(fields["L"]), float(fields["extent"]))
        rows, cols = int(fields["rows"]), int(fields["cols"])
        matrix = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    except (KeyError, ValueError) as exc:
        raise TraceFormatError(f"bad grid file: {exc}") from None
    if matrix.shape != (rows, cols) or rows != spec.cells:
        raise TraceFormatError("grid dimensions do not match header")
    return spec, matrix
