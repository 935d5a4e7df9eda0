"""Empirical CDF, CCDF and lower quantiles over non-negative samples."""

from __future__ import annotations

import math

import numpy as np

from .model import TraceFormatError, ValidationError
from .traceio import format_number


class EmptyDistributionError(ValidationError):
    """Raised when a distribution query is made on no samples."""

    def __init__(self, what="distribution"):
        super().__init__(f"no samples in {what}")


class EmpiricalDistribution:
    def __init__(self, samples, name="distribution"):
        values = np.sort(np.asarray(list(samples), dtype=float))
        if values.size and not (np.isfinite(values).all() and values[0] >= 0):
            raise ValidationError("samples must be finite and non-negative")
        self.values = values
        self.name = name

    def __len__(self):
        return int(self.values.size)

    def _require(self):
        if not self.values.size:
            raise EmptyDistributionError(self.name)

    def distinct(self):
        """Distinct values ascending, with how many samples are <= each one."""
        self._require()
        vals, counts = np.unique(self.values, return_counts=True)
        return vals, np.cumsum(counts)

    def cdf(self):
        vals, below = self.distinct()
        n = self.values.size
        return [(float(v), int(c) / n) for v, c in zip(vals, below)]

    def ccdf(self):
        vals, below = self.distinct()
        n = self.values.size
        return [(float(v), (n - int(c)) / n) for v, c in zip(vals, below)]

    def cdf_at(self, x):
        self._require()
        return int(np.searchsorted(self.values, x, side="right")) / self.values.size

    def ccdf_at(self, x):
        self._require()
        n = self.values.size
        return (n - int(np.searchsorted(self.values, x, side="right"))) / n

    def quantile(self, q):
        """Smallest sample v with cdf(v) >= q (no interpolation)."""
        self._require()
        if not 0 <= q <= 1:
            raise ValidationError(f"quantile level must be in [0, 1], got {q}")
        n = self.values.size
        # smallest k with k / n >= q, guarding against float error in q * n
        k = max(1, math.ceil(q * n))
        while k > 1 and (k - 1) / n >= q:
            k -= 1
        while k / n < q:
            k += 1
        return float(self.values[k - 1])

    def median(self):
        return self.quantile(0.5)


def write_distribution(d: EmpiricalDistribution, stream, kind="ccdf") -> None:
    if kind not in ("cdf", "ccdf"):
        raise ValidationError(f"unknown distribution kind {kind!r}")
    points = d.ccdf() if kind == "ccdf" else d.cdf()
    stream.write(f"value,{kind}\n")
    for value, p in points:
        stream.write(f"{format_number(value)},{p:.6f}\n")


def parse_distribution(stream):
    """Read a distribution file; returns ``(kind, [(value, probability), ...])``."""
    lines = iter(stream)
    header = (next(lines, "") or "").rstrip("\r\n")
    if header not in ("value,cdf", "value,ccdf"):
        raise TraceFormatError("expected header 'value,cdf' or 'value,ccdf'")
    points = []
    for raw in lines:
        line = raw.rstrip("\r\n")
        if not line:
            continue
        try:
            v, p = line.split(",")
            points.append((float(v), float(p)))
        except ValueError:
            raise TraceFormatError(f"malformed distribution row {line!r}") from None
    return header.split(",")[1], points
