"""Synthetic trace generators: a points-of-interest model and random waypoint.

Both generators draw from ``numpy.random.Generator(PCG64(seed))`` in a fixed
order (users in arrival order, each user's draws consecutive), so a given
config and seed always yield the same trace. Positions are quantized to the
millimeter, the precision at which traces are stored.

The points-of-interest model is not taken from measured data; its defaults
are chosen so that the generated traces show the qualitative traits seen in
virtual-world measurements: users gather around a few weighted hotspots,
travel short distances and mostly stay less than an hour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .model import LandConfig, Position, Snapshot, TraceFormatError, TraceSet, ValidationError

DAY = 86400
# exponential sessions with this mean put 90% of them under one hour
DEFAULT_MEAN_SESSION = 3600 / math.log(10)


@dataclass(frozen=True)
class Hotspot:
    center: Position
    weight: float
    radius: float


DEFAULT_HOTSPOTS = (
    Hotspot(Position(64.0, 64.0, 22.0), 5.0, 15.0),
    Hotspot(Position(184.0, 96.0, 22.0), 3.0, 15.0),
    Hotspot(Position(112.0, 200.0, 22.0), 1.0, 15.0),
)


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValidationError(f"{name}: must be positive, got {value!r}")


def _interval(name, pair, positive=False):
    lo, hi = pair
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or lo > hi:
        raise ValidationError(f"{name}: need 0 <= min <= max, got {pair!r}")
    if positive and lo <= 0:
        raise ValidationError(f"{name}: must be positive, got {pair!r}")


def _common_checks(cfg):
    if not isinstance(cfg.tau, int) or cfg.tau <= 0:
        raise ValidationError(f"tau: must be a positive integer, got {cfg.tau!r}")
    if not isinstance(cfg.duration, int) or cfg.duration < 0:
        raise ValidationError(f"duration: must be a non-negative integer, got {cfg.duration!r}")
    _interval("pause_range", cfg.pause_range)
    if not isinstance(cfg.seed, int):
        raise ValidationError(f"seed: must be an integer, got {cfg.seed!r}")


@dataclass(frozen=True)
class PoiModelConfig:
    land: LandConfig = field(default_factory=LandConfig)
    tau: int = 10
    duration: int = DAY
    user_arrival_rate: float = 100 / DAY
    mean_session: float = DEFAULT_MEAN_SESSION
    hotspots: tuple = DEFAULT_HOTSPOTS
    speed: float = 3.0
    pause_range: tuple = (60.0, 600.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hotspots", tuple(self.hotspots))
        _common_checks(self)
        _positive("user_arrival_rate", self.user_arrival_rate)
        _positive("mean_session", self.mean_session)
        _positive("speed", self.speed)
        if not self.hotspots:
            raise ValidationError("hotspots: at least one hotspot is required")
        ext = self.land.extent
        for h in self.hotspots:
            x, y, z = h.center
            if not (0 <= x <= ext and 0 <= y <= ext and math.isfinite(z)):
                raise ValidationError(f"hotspot: center {tuple(h.center)} outside the land")
            _positive("hotspot weight", h.weight)
            if not (h.radius >= 0 and math.isfinite(h.radius)):
                raise ValidationError(f"hotspot radius: must be >= 0, got {h.radius!r}")


@dataclass(frozen=True)
class RwpModelConfig:
    land: LandConfig = field(default_factory=LandConfig)
    tau: int = 10
    duration: int = DAY
    user_count: int = 100
    speed_range: tuple = (0.5, 3.0)
    pause_range: tuple = (0.0, 120.0)
    seed: int = 0

    def __post_init__(self):
        _common_checks(self)
        if not isinstance(self.user_count, int) or self.user_count < 0:
            raise ValidationError(f"user_count: must be a non-negative integer, got {self.user_count!r}")
        _interval("speed_range", self.speed_range, positive=True)


def _quantize(a):
    return np.round(a, 3)


def _sample_path(knot_t, knot_xyz, times):
    return np.column_stack([np.interp(times, knot_t, knot_xyz[:, c]) for c in range(3)])


def _walk(knot_t, knot_xyz, t, here, target, speed, pause):
    """Append a straight leg to ``target`` followed by a pause; returns the new time."""
    t += float(np.linalg.norm(target - here)) / speed
    knot_t.append(t)
    knot_xyz.append(target)
    t += pause
    knot_t.append(t)
    knot_xyz.append(target)
    return t


def _build_trace(cfg, tracks):
    """Assemble snapshots from per-user ``(sample_indices, xyz)`` tracks."""
    n_snap = -(-cfg.duration // cfg.tau)
    buckets = [dict() for _ in range(n_snap)]
    for user, (ks, xyz) in tracks:
        xyz = _quantize(xyz)
        origin = (xyz == 0).all(axis=1)
        xyz[origin, 0] = 0.001
        for k, p in zip(ks.tolist(), xyz.tolist()):
            buckets[k][user] = Position(*p)
    return TraceSet(cfg.land, cfg.tau, [Snapshot(k * cfg.tau, b) for k, b in enumerate(buckets)])


def _uniform_disc(rng, center, radius, extent):
    rho = radius * math.sqrt(rng.random())
    phi = 2 * math.pi * rng.random()
    x = min(max(center[0] + rho * math.cos(phi), 0.0), extent)
    y = min(max(center[1] + rho * math.sin(phi), 0.0), extent)
    return np.array([x, y, center[2]])


def generate_poi(cfg: PoiModelConfig) -> TraceSet:
    """Points-of-interest mobility.

    Users arrive as a Poisson process, stay for an exponential session and
    repeatedly walk at constant speed to a random point inside a hotspot
    (chosen with probability proportional to its weight), then pause for a
    uniform time in ``pause_range``.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    ext = cfg.land.extent
    weights = np.array([h.weight for h in cfg.hotspots], dtype=float)
    weights /= weights.sum()
    tracks = []
    arrival = 0.0
    while cfg.duration > 0:
        arrival += rng.exponential(1 / cfg.user_arrival_rate)
        if arrival >= cfg.duration:
            break
        stay = rng.exponential(cfg.mean_session)
        leave = min(arrival + stay, cfg.duration)
        first = cfg.hotspots[rng.choice(len(weights), p=weights)]
        here = np.array([rng.uniform(0, ext), rng.uniform(0, ext), first.center[2]])
        knot_t, knot_xyz = [arrival], [here]
        t, spot = arrival, first
        while t < leave:
            target = _uniform_disc(rng, spot.center, spot.radius, ext)
            t = _walk(knot_t, knot_xyz, t, here, target, cfg.speed, rng.uniform(*cfg.pause_range))
            here = target
            spot = cfg.hotspots[rng.choice(len(weights), p=weights)]
        ks = np.arange(math.ceil(arrival / cfg.tau), math.ceil(leave / cfg.tau))
        if ks.size:
            user = f"u{len(tracks):05d}"
            tracks.append((user, (ks, _sample_path(knot_t, np.array(knot_xyz), ks * cfg.tau))))
    return _build_trace(cfg, tracks)


def generate_rwp(cfg: RwpModelConfig) -> TraceSet:
    """Random waypoint: every user is on the land for the whole duration."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    ext = cfg.land.extent
    ks = np.arange(-(-cfg.duration // cfg.tau))
    times = ks * cfg.tau
    width = len(str(max(cfg.user_count - 1, 0)))
    tracks = []
    for i in range(cfg.user_count if ks.size else 0):
        here = np.array([rng.uniform(0, ext), rng.uniform(0, ext), 0.0])
        knot_t, knot_xyz = [0.0], [here]
        t = 0.0
        while t < cfg.duration:
            target = np.array([rng.uniform(0, ext), rng.uniform(0, ext), 0.0])
            speed = rng.uniform(*cfg.speed_range)
            t = _walk(knot_t, knot_xyz, t, here, target, speed, rng.uniform(*cfg.pause_range))
            here = target
        tracks.append((f"n{i:0{width}d}", (ks, _sample_path(knot_t, np.array(knot_xyz), times))))
    return _build_trace(cfg, tracks)


# key=value model config files

def _floats(value, n):
    parts = value.split(":")
    if len(parts) != n:
        raise ValueError(f"expected {n} ':'-separated numbers")
    return tuple(float(p) for p in parts)


_POI_KEYS = {"model", "land", "extent", "tau", "duration", "user_arrival_rate",
             "mean_session", "hotspot", "speed", "pause_range", "seed"}
_RWP_KEYS = {"model", "land", "extent", "tau", "duration", "user_count",
             "speed_range", "pause_range", "seed"}


def parse_model_config(text: str):
    """Parse a ``key=value`` model config into a Poi or Rwp config.

    Lines without ``=`` raise ``TraceFormatError``; unknown keys and invalid
    values raise ``ValidationError``.
    """
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise TraceFormatError(f"config line {lineno}: expected key=value")
        items.append((key.strip(), value.strip()))
    model = "poi"
    for key, value in items:
        if key == "model":
            model = value
    if model not in ("poi", "rwp"):
        raise ValidationError(f"model: unknown model {model!r}")
    allowed = _POI_KEYS if model == "poi" else _RWP_KEYS
    land_kw, kw, hotspots, seen = {}, {}, [], set()
    for key, value in items:
        if key not in allowed:
            raise ValidationError(f"{key}: unknown config key for model {model}")
        if key in seen and key != "hotspot":
            raise ValidationError(f"{key}: repeated config key")
        seen.add(key)
        try:
            if key == "model":
                continue
            elif key == "land":
                land_kw["name"] = value
            elif key == "extent":
                land_kw["extent"] = float(value)
            elif key in ("tau", "duration", "seed", "user_count"):
                kw[key] = int(value)
            elif key in ("user_arrival_rate", "mean_session", "speed"):
                kw[key] = float(value)
            elif key in ("pause_range", "speed_range"):
                kw[key] = _floats(value, 2)
            elif key == "hotspot":
                x, y, z, w, rad = _floats(value, 5)
                hotspots.append(Hotspot(Position(x, y, z), w, rad))
        except ValueError as exc:
            raise ValidationError(f"{key}: {exc}") from None
    if hotspots:
        kw["hotspots"] = tuple(hotspots)
    cls = PoiModelConfig if model == "poi" else RwpModelConfig
    return cls(land=LandConfig(**land_kw), **kw)


def format_model_config(cfg) -> str:
    """Render a config in the ``key=value`` format accepted by ``parse_model_config``."""
    lines = [f"model={'poi' if isinstance(cfg, PoiModelConfig) else 'rwp'}",
             f"land={cfg.land.name}", f"extent={cfg.land.extent!r}"]
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "land":
            continue
        if f.name == "hotspots":
            for h in value:
                lines.append("hotspot=" + ":".join(repr(float(v)) for v in (*h.center, h.weight, h.radius)))
        elif isinstance(value, tuple):
            lines.append(f"{f.name}=" + ":".join(repr(float(v)) for v in value))
        else:
            lines.append(f"{f.name}={value!r}")
    return "\n".join(lines) + "\n"


def with_seed(cfg, seed):
    return replace(cfg, seed=seed)
