"""Domain types for position traces and line-of-sight reachability."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain
from typing import Mapping, NamedTuple, Optional

import numpy as np

BLUETOOTH_RANGE = 10.0
WIFI_RANGE = 80.0
DEFAULT_EXTENT = 256.0


class TraceError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(TraceError, ValueError):
    """A value or configuration violates a documented constraint."""


class TraceFormatError(TraceError):
    """Input text does not follow the expected file format."""


class Position(NamedTuple):
    x: float
    y: float
    z: float


def distance(p, q, planar=False) -> float:
    """Euclidean distance between two positions, ignoring z when ``planar``."""
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    s = dx * dx + dy * dy
    if not planar:
        dz = p[2] - q[2]
        s = s + dz * dz
    return math.sqrt(s)


def in_range(p, q, r, planar=False) -> bool:
    # strict: a pair exactly r apart is not linked
    return distance(p, q, planar) < float(r)


def check_user_id(user: str) -> str:
    if not user or any(c == "," or c.isspace() for c in user):
        raise ValidationError(f"invalid user id {user!r}")
    return user


@dataclass(frozen=True)
class LandConfig:
    name: str = "land"
    extent: float = DEFAULT_EXTENT

    def __post_init__(self):
        if not self.extent > 0 or not math.isfinite(self.extent):
            raise ValidationError(f"extent must be positive, got {self.extent}")
        if not self.name or any(c.isspace() for c in self.name):
            raise ValidationError(f"invalid land name {self.name!r}")


@dataclass(frozen=True)
class RadioRange:
    r: float

    def __post_init__(self):
        if not self.r > 0 or not math.isfinite(self.r):
            raise ValidationError(f"radio range must be positive, got {self.r}")

    def __float__(self):
        return float(self.r)

    @property
    def label(self) -> str:
        r = float(self.r)
        return str(int(r)) if r.is_integer() else repr(r)


@dataclass(frozen=True)
class Snapshot:
    """User positions at one instant. A ``None`` position marks a present
    user whose coordinates are unknown (seated)."""

    t: int
    entries: Mapping[str, Optional[Position]] = field(default_factory=dict)

    def known(self):
        return {u: p for u, p in self.entries.items() if p is not None}


@dataclass(frozen=True, eq=False)
class IndexedTrace:
    """Array view of a trace used by the vectorized analyses.

    Users are indexed in sorted id order, so index order equals
    lexicographic order of ids.
    """

    users: tuple
    times: np.ndarray  # (n_snap,)
    present: np.ndarray  # (n_snap, n_users) bool, includes unknown positions
    known: np.ndarray  # (n_snap, n_users) bool
    # flat arrays over all known entries, ordered by (snapshot, user)
    entry_snap: np.ndarray
    entry_user: np.ndarray
    entry_xyz: np.ndarray
    offsets: np.ndarray  # entries of snapshot k are offsets[k]:offsets[k+1]

    def __post_init__(self):
        for value in vars(self).values():
            if isinstance(value, np.ndarray):
                value.flags.writeable = False

    def snapshot(self, k):
        a, b = self.offsets[k], self.offsets[k + 1]
        return self.entry_user[a:b], self.entry_xyz[a:b]

    @cached_property
    def _by_user(self):
        order = np.argsort(self.entry_user, kind="stable")
        bounds = np.searchsorted(self.entry_user[order], np.arange(len(self.users) + 1))
        return order, bounds

    def batches(self, planar=False, budget=1 << 21):
        """Pairwise distances for all snapshots, in time-ordered chunks.

        Each chunk is a list of groups ``(ks, users, dist)`` covering the
        chunk's snapshots that hold the same number m of known positions:
        snapshot indices ``ks`` (B,), user indices (B, m) and distance stacks
        (B, m, m). A chunk holds about ``budget`` distances.
        """
        sizes = np.diff(self.offsets)
        cost = np.cumsum(np.maximum(sizes, 1) ** 2)
        k0 = 0
        while k0 < sizes.size:
            base = cost[k0 - 1] if k0 else 0
            k1 = max(k0 + 1, int(np.searchsorted(cost, base + budget, side="right")))
            ks_all, chunk = np.arange(k0, k1), sizes[k0:k1]
            groups = []
            for m in np.unique(chunk).tolist():
                ks = ks_all[chunk == m]
                idx = self.offsets[ks][:, None] + np.arange(m)
                groups.append((ks, self.entry_user[idx], pairwise_distances(self.entry_xyz[idx], planar)))
            yield groups
            k0 = k1

    def track(self, i):
        """Snapshot indices and coordinates of user ``i``'s known positions."""
        order, bounds = self._by_user
        sel = order[bounds[i]:bounds[i + 1]]
        return self.entry_snap[sel], self.entry_xyz[sel]


@dataclass(frozen=True)
class TraceSet:
    land: LandConfig
    tau: int
    snapshots: tuple = ()

    def __post_init__(self):
        if not isinstance(self.tau, int) or self.tau <= 0:
            raise ValidationError(f"tau must be a positive integer, got {self.tau!r}")
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        prev = None
        for s in self.snapshots:
            if s.t < 0 or s.t % self.tau:
                raise ValidationError(f"timestamp {s.t} is not a non-negative multiple of tau")
            if prev is not None and s.t != prev + self.tau:
                raise ValidationError(f"snapshot at {s.t} does not follow {prev} by tau")
            prev = s.t
        ix = self.indexed
        for u in ix.users:
            check_user_id(u)
        xyz = ix.entry_xyz
        bad = ~np.isfinite(xyz).all(axis=1)
        bad |= (xyz[:, 0] < 0) | (xyz[:, 0] > self.land.extent)
        bad |= (xyz[:, 1] < 0) | (xyz[:, 1] > self.land.extent)
        bad |= (xyz == 0).all(axis=1)
        if bad.any():
            e = int(np.flatnonzero(bad)[0])
            t = self.snapshots[ix.entry_snap[e]].t
            raise ValidationError(
                f"invalid position {tuple(xyz[e])} for {ix.users[ix.entry_user[e]]} at {t}: "
                "coordinates must be finite, inside the land and not the origin"
            )

    @property
    def start(self):
        return self.snapshots[0].t if self.snapshots else None

    @property
    def end(self):
        """Exclusive end of the observed timeline."""
        return self.snapshots[-1].t + self.tau if self.snapshots else None

    def users(self):
        seen = set()
        for s in self.snapshots:
            seen.update(s.entries)
        return sorted(seen)

    @cached_property
    def indexed(self) -> IndexedTrace:
        users = tuple(self.users())
        index = {u: i for i, u in enumerate(users)}
        n_snap, n_users = len(self.snapshots), len(users)
        present = np.zeros((n_snap, n_users), dtype=bool)
        counts = np.zeros(n_snap, dtype=np.int64)
        user_ids, coords = [], []
        for k, s in enumerate(self.snapshots):
            counts[k] = len(s.entries)
            user_ids.extend(index[u] for u in s.entries)
            coords.extend(s.entries.values())
        snap = np.repeat(np.arange(n_snap), counts)
        user = np.array(user_ids, dtype=np.int64)
        present[snap, user] = True
        keep = np.fromiter((p is not None for p in coords), bool, len(coords))
        known_coords = [p for p in coords if p is not None] if not keep.all() else coords
        if any(len(p) != 3 for p in known_coords):
            raise ValidationError("positions must be numeric (x, y, z) triples")
        try:
            xyz = np.fromiter(chain.from_iterable(known_coords), float, 3 * len(known_coords))
        except (TypeError, ValueError):
            raise ValidationError("positions must be numeric (x, y, z) triples") from None
        xyz = xyz.reshape(-1, 3)
        snap, user = snap[keep], user[keep]
        order = np.lexsort((user, snap))
        snap, user, xyz = snap[order], user[order], xyz[order]
        known = np.zeros((n_snap, n_users), dtype=bool)
        known[snap, user] = True
        return IndexedTrace(
            users=users,
            times=np.array([s.t for s in self.snapshots], dtype=np.int64),
            present=present,
            known=known,
            entry_snap=snap,
            entry_user=user,
            entry_xyz=xyz,
            offsets=np.searchsorted(snap, np.arange(n_snap + 1)),
        )


def pairwise_distances(xyz, planar=False):
    """Distance matrices of ``(..., m, 3)`` coordinates, computed with the
    same arithmetic as ``distance``."""
    x, y, z = np.moveaxis(xyz, -1, 0)
    dx = x[..., :, None] - x[..., None, :]
    dy = y[..., :, None] - y[..., None, :]
    s = dx * dx + dy * dy
    if not planar:
        dz = z[..., :, None] - z[..., None, :]
        s += dz * dz
    return np.sqrt(s)


def as_range(r) -> float:
    r = float(r)
    if not r > 0 or not math.isfinite(r):
        raise ValidationError(f"radio range must be positive, got {r}")
    return r
