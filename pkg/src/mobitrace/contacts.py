"""Sessions, contact intervals and the contact-time metrics.

All intervals are half-open ``[start, end)`` in integer seconds where ``end``
is the last observed snapshot plus tau. With this convention contact times and
inter-contact times tile a pair's timeline exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, partial
from typing import NamedTuple

import numpy as np

from .model import TraceSet, ValidationError, as_range

INCLUDE = "include"
EXCLUDE_CENSORED = "exclude-censored"


class Session(NamedTuple):
    user: str
    start: int
    end: int

    @property
    def duration(self):
        return self.end - self.start


class ContactInterval(NamedTuple):
    u: str
    v: str
    start: int
    end: int
    left_censored: bool = False
    right_censored: bool = False

    @property
    def duration(self):
        return self.end - self.start

    @property
    def censored(self):
        return self.left_censored or self.right_censored


@dataclass(frozen=True)
class PairTimeline:
    u: str
    v: str
    contacts: tuple


def extract_sessions(trace: TraceSet, gap_tolerance: int = 0):
    """Group each user's presence into sessions.

    A session is a maximal run of snapshots where the user is present, with up
    to ``gap_tolerance`` consecutive absent snapshots bridged inside a run.
    """
    if gap_tolerance < 0:
        raise ValidationError("gap_tolerance must be >= 0")
    ix = trace.indexed
    sessions = {}
    for i, user in enumerate(ix.users):
        ks = np.flatnonzero(ix.present[:, i])
        if ks.size == 0:
            continue
        breaks = np.flatnonzero(np.diff(ks) > gap_tolerance + 1)
        firsts = np.concatenate(([ks[0]], ks[breaks + 1]))
        lasts = np.concatenate((ks[breaks], [ks[-1]]))
        sessions[user] = [
            Session(user, int(ix.times[a]), int(ix.times[b]) + trace.tau)
            for a, b in zip(firsts, lasts)
        ]
    return sessions


@lru_cache(maxsize=256)
def _upper_pairs(m):
    # row-major (i, j), i < j: codes come out sorted when users are
    return np.triu_indices(m, 1)


_make_contact = partial(tuple.__new__, ContactInterval)
_FLAG_LIMIT = 1 << 26


class ContactBuilder:
    """Accumulates contact starts and ends from distance batches fed in time
    order (see ``IndexedTrace.batches``)."""

    def __init__(self, trace: TraceSet, r):
        self.trace = trace
        self.r = as_range(r)
        self._prev = np.empty(0, dtype=np.int64)
        self._starts, self._start_at, self._ends, self._end_at = [], [], [], []
        n = len(trace.indexed.users)
        # membership flags over all pair codes when they fit in memory
        self._linked = np.zeros(n * n, dtype=bool) if n * n <= _FLAG_LIMIT else None

    def _codes(self, groups):
        """Sorted codes ``i * n + j`` (i < j) of linked pairs, per snapshot."""
        n = len(self.trace.indexed.users)
        empty = np.empty(0, dtype=np.int64)
        per = {}
        for ks, users, dist in groups:
            m = users.shape[1]
            if m < 2:
                per.update(dict.fromkeys(ks.tolist(), empty))
                continue
            a, b = _upper_pairs(m)
            linked = dist[:, a, b] < self.r
            codes = users[:, a] * n + users[:, b]
            for k, row, c in zip(ks.tolist(), linked, codes):
                per[k] = c[row]
        return sorted(per.items())

    def _changes(self, prev, cur):
        """Codes in ``cur`` but not ``prev``, and in ``prev`` but not ``cur``."""
        on = self._linked
        if on is None:
            return (np.setdiff1d(cur, prev, assume_unique=True),
                    np.setdiff1d(prev, cur, assume_unique=True))
        # ``on`` marks the codes of ``prev``
        began = cur[~on[cur]]
        on[prev] = False
        on[cur] = True
        return began, prev[~on[prev]]

    def add(self, groups):
        prev = self._prev
        for k, cur in self._codes(groups):
            if cur.size or prev.size:
                began, ended = self._changes(prev, cur)
                if began.size:
                    self._starts.append(began)
                    self._start_at.append(np.full(began.size, k))
                if ended.size:
                    self._ends.append(ended)
                    self._end_at.append(np.full(ended.size, k))
            prev = cur
        self._prev = prev

    def finish(self):
        trace, ix = self.trace, self.trace.indexed
        n_snap, n = len(trace.snapshots), len(ix.users)
        if self._prev.size:
            self._ends.append(self._prev)
            self._end_at.append(np.full(self._prev.size, n_snap))
            self._prev = np.empty(0, dtype=np.int64)
        if not self._starts:
            return []
        sc, sk = np.concatenate(self._starts), np.concatenate(self._start_at)
        ec, ek = np.concatenate(self._ends), np.concatenate(self._end_at)
        so, eo = np.lexsort((sk, sc)), np.lexsort((ek, ec))
        sc, sk, ek = sc[so], sk[so], ek[eo]
        ui, vi = sc // n, sc % n
        # a contact ending at snapshot k was cut by absence if either user is
        # not observable there
        inside = ek < n_snap
        cut = np.ones(ek.size, dtype=bool)
        cut[inside] = ~(ix.known[ek[inside], ui[inside]] & ix.known[ek[inside], vi[inside]])
        t0, tau = int(ix.times[0]), trace.tau
        names = np.array(ix.users, dtype=object)
        contacts = list(map(_make_contact, zip(
            names[ui].tolist(), names[vi].tolist(),
            (t0 + sk * tau).tolist(), (t0 + ek * tau).tolist(),
            (sk == 0).tolist(), cut.tolist(),
        )))
        bounds = [0, *(np.flatnonzero(np.diff(sc)) + 1).tolist(), len(contacts)]
        timelines = []
        for lo, hi in zip(bounds, bounds[1:]):
            c = contacts[lo]
            timelines.append(PairTimeline(c.u, c.v, tuple(contacts[lo:hi])))
        return timelines


def extract_contacts(trace: TraceSet, r, planar=False):
    """Contact timelines for every pair that is ever in range.

    A contact is a maximal run of consecutive snapshots in which both users
    have known positions closer than ``r``. It is left-censored when it starts
    at the first snapshot of the trace, and right-censored when it is cut by
    the end of the trace or by either user leaving (or losing a known
    position) rather than by the pair moving apart.
    """
    builder = ContactBuilder(trace, r)
    for groups in trace.indexed.batches(planar):
        builder.add(groups)
    return builder.finish()


def iter_contacts(timelines):
    for tl in timelines:
        yield from tl.contacts


def contact_times(timelines, censor_policy=INCLUDE):
    if censor_policy not in (INCLUDE, EXCLUDE_CENSORED):
        raise ValidationError(f"unknown censor policy {censor_policy!r}")
    skip = censor_policy == EXCLUDE_CENSORED
    return [c.duration for c in iter_contacts(timelines) if not (skip and c.censored)]


def inter_contact_times(timelines):
    """Gaps between successive contacts of each pair: next start minus previous end."""
    out = []
    for tl in timelines:
        cs = tl.contacts
        out.extend(b.start - a.end for a, b in zip(cs, cs[1:]))
    return out


def first_contact_times(trace, timelines, sessions):
    """Wait from each user's first appearance to their first contact ever.

    Returns ``(ft, never)``: a mapping user -> seconds for users with at least
    one contact, and the number of users who never had one.
    """
    first_contact = {}
    for tl in timelines:
        start = tl.contacts[0].start
        for user in (tl.u, tl.v):
            if user not in first_contact or start < first_contact[user]:
                first_contact[user] = start
    ft, never = {}, 0
    for user in trace.users():
        user_sessions = sessions.get(user)
        if not user_sessions:
            continue
        if user in first_contact:
            ft[user] = first_contact[user] - user_sessions[0].start
        else:
            never += 1
    return ft, never
