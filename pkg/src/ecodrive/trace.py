"""Trip data model, CSV ingestion and fixed-length windowing."""
from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, TextIO

import numpy as np

from .errors import (BadRow, EmptyTrace, MissingColumn, NonMonotoneTime,
                     WindowTooShort)
from .obd import CHANNEL_RANGES, Channel

if TYPE_CHECKING:
    from .fuel import VehicleProfile

CSV_HEADER = ("t_ms", "speed_kmh", "rpm", "maf_gps", "map_kpa", "iat_c",
              "abs_load_pct", "fuel_rate_lph", "lat", "lon")
MANDATORY = ("t_ms", "speed_kmh", "rpm")

DEFAULT_PERIOD_MS = 1000
# Gaps longer than this many nominal periods start a new segment.
MAX_GAP_PERIODS = 3

TRAINING_WINDOW_S = 3
ANALYSIS_WINDOW_S = 10

KMH_TO_MS = 1 / 3.6


@dataclass(frozen=True)
class Sample:
    t: int
    speed: float
    rpm: float
    maf: Optional[float] = None
    map: Optional[float] = None
    iat: Optional[float] = None
    abs_load: Optional[float] = None
    fuel_rate: Optional[float] = None
    lat: Optional[float] = None
    lon: Optional[float] = None


# CSV column -> (Sample attribute, channel used for range checks)
_COLUMNS = {
    "t_ms": ("t", None),
    "speed_kmh": ("speed", Channel.SPEED),
    "rpm": ("rpm", Channel.RPM),
    "maf_gps": ("maf", Channel.MAF),
    "map_kpa": ("map", Channel.MAP),
    "iat_c": ("iat", Channel.IAT),
    "abs_load_pct": ("abs_load", Channel.ABS_LOAD),
    "fuel_rate_lph": ("fuel_rate", Channel.FUEL_RATE),
    "lat": ("lat", None),
    "lon": ("lon", None),
}
_COORD_RANGES = {"lat": (-90.0, 90.0), "lon": (-180.0, 180.0)}


def check_sample(s: Sample) -> list[str]:
    """Return the range violations of ``s``; empty when the sample is valid."""
    problems = []
    for col, (attr, chan) in _COLUMNS.items():
        v = getattr(s, attr)
        if v is None or chan is None and attr == "t":
            continue
        lo, hi = CHANNEL_RANGES[chan] if chan else _COORD_RANGES[attr]
        if not (lo <= v <= hi):
            problems.append(f"{col}={v} outside [{lo}, {hi}]")
    return problems


@dataclass(frozen=True)
class Trip:
    samples: tuple[Sample, ...]
    vehicle: Optional["VehicleProfile"] = None
    period_ms: int = DEFAULT_PERIOD_MS
    capture_date: Optional[str] = None
    # Indices where a new contiguous segment begins (always starts with 0).
    segment_starts: tuple[int, ...] = (0,)

    def __post_init__(self):
        if len(self.samples) < 2:
            raise EmptyTrace(f"a trip needs at least 2 samples, got {len(self.samples)}")
        ts = [s.t for s in self.samples]
        for i in range(1, len(ts)):
            if ts[i] <= ts[i - 1]:
                raise NonMonotoneTime(f"t={ts[i]} at sample {i} does not increase")
        if not self.segment_starts or self.segment_starts[0] != 0:
            raise ValueError("segment_starts must begin with 0")

    def __len__(self):
        return len(self.samples)

    def column(self, attr: str) -> np.ndarray:
        """Channel values as float array, NaN where absent."""
        return np.array([np.nan if (v := getattr(s, attr)) is None else v
                         for s in self.samples], dtype=float)

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.samples], dtype=np.int64)

    @property
    def duration_s(self) -> float:
        return (self.samples[-1].t - self.samples[0].t + self.period_ms) / 1000.0

    def segments(self) -> list[tuple[int, int]]:
        bounds = list(self.segment_starts) + [len(self.samples)]
        return list(zip(bounds[:-1], bounds[1:]))

    def intervals_s(self) -> np.ndarray:
        """Time each sample stands for: gap to the next sample, or one
        nominal period for the last sample of a segment."""
        t = self.t
        dt = np.full(len(t), self.period_ms / 1000.0)
        for a, b in self.segments():
            dt[a:b - 1] = np.diff(t[a:b]) / 1000.0
        return dt


@dataclass(frozen=True)
class Window:
    start_t: int
    end_t: int
    start_index: int
    samples: tuple[Sample, ...]
    accel: np.ndarray = field(repr=False, compare=False)
    dt_s: np.ndarray = field(repr=False, compare=False)

    def __len__(self):
        return len(self.samples)

    @property
    def speed(self) -> np.ndarray:
        return np.array([s.speed for s in self.samples], dtype=float)

    @property
    def rpm(self) -> np.ndarray:
        return np.array([s.rpm for s in self.samples], dtype=float)


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    return v


def _parse_t(text: str) -> int:
    v = _parse_float(text)
    if v != int(v):
        raise ValueError(f"t_ms must be whole milliseconds, got {text!r}")
    return int(v)


def read_samples(source: TextIO) -> list[Sample]:
    """Parse trace CSV rows into samples without resampling."""
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyTrace("trace has no header row") from None
    missing = [c for c in MANDATORY if c not in header]
    if missing:
        raise MissingColumn(f"missing mandatory column(s): {', '.join(missing)}")
    idx = {c: header.index(c) for c in _COLUMNS if c in header}

    samples, bad = [], []
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            vals = {}
            for col, i in idx.items():
                cell = row[i].strip() if i < len(row) else ""
                attr = _COLUMNS[col][0]
                if not cell:
                    if col in MANDATORY:
                        raise ValueError(f"empty mandatory field {col}")
                    continue
                vals[attr] = _parse_t(cell) if col == "t_ms" else _parse_float(cell)
            s = Sample(**vals)
        except (ValueError, TypeError) as exc:
            bad.append((rowno, str(exc)))
            continue
        problems = check_sample(s)
        if problems:
            bad.append((rowno, "; ".join(problems)))
            continue
        if samples and s.t <= samples[-1].t:
            raise NonMonotoneTime(
                f"row {rowno}: t_ms={s.t} not after previous {samples[-1].t}")
        samples.append(s)
    if bad:
        raise BadRow(bad)
    if not samples:
        raise EmptyTrace("trace has no data rows")
    return samples


def regularize(samples: Sequence[Sample], period_ms: int = DEFAULT_PERIOD_MS,
               max_gap_periods: int = MAX_GAP_PERIODS
               ) -> tuple[list[Sample], tuple[int, ...]]:
    """Align samples to a uniform grid by nearest-sample lookup.

    The stream is cut wherever consecutive samples are more than
    ``max_gap_periods`` periods apart; each piece gets its own grid anchored
    at its first sample. Returns the aligned samples and segment starts.
    Samples already on the grid come back unchanged.
    """
    pieces, cur = [], [samples[0]]
    for prev, s in zip(samples, samples[1:]):
        if s.t - prev.t > max_gap_periods * period_ms:
            pieces.append(cur)
            cur = []
        cur.append(s)
    pieces.append(cur)

    out, starts = [], []
    for piece in pieces:
        starts.append(len(out))
        ts = [s.t for s in piece]
        t0 = ts[0]
        n = int(round((ts[-1] - t0) / period_ms)) + 1
        for k in range(n):
            g = t0 + k * period_ms
            j = bisect.bisect_left(ts, g)
            if j == len(ts) or (j > 0 and g - ts[j - 1] <= ts[j] - g):
                j -= 1
            src = piece[j]
            out.append(src if src.t == g else replace(src, t=g))
    return out, tuple(starts)


def ingest_csv(source: TextIO, vehicle: Optional["VehicleProfile"] = None,
               period_ms: int = DEFAULT_PERIOD_MS,
               capture_date: Optional[str] = None) -> Trip:
    raw = read_samples(source)
    samples, starts = regularize(raw, period_ms)
    if len(samples) < 2:
        raise EmptyTrace(f"a trip needs at least 2 samples, got {len(samples)}")
    return Trip(tuple(samples), vehicle, period_ms, capture_date, starts)


def read_trip(path, vehicle=None, period_ms: int = DEFAULT_PERIOD_MS) -> Trip:
    with open(path, newline="", encoding="utf-8") as fh:
        return ingest_csv(fh, vehicle, period_ms)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def emit_csv(trip_or_samples, sink: TextIO) -> None:
    samples = getattr(trip_or_samples, "samples", trip_or_samples)
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(CSV_HEADER)
    attrs = [_COLUMNS[c][0] for c in CSV_HEADER]
    for s in samples:
        w.writerow([_fmt(getattr(s, a)) for a in attrs])


def to_csv_text(trip_or_samples) -> str:
    buf = io.StringIO()
    emit_csv(trip_or_samples, buf)
    return buf.getvalue()


def write_trip(trip, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        emit_csv(trip, fh)


def derive_acceleration(trip: Trip) -> np.ndarray:
    """Backward-difference acceleration in m/s^2, zero at each segment start."""
    v = trip.column("speed") * KMH_TO_MS
    t = trip.t / 1000.0
    a = np.zeros(len(v))
    a[1:] = np.diff(v) / np.diff(t)
    a[list(trip.segment_starts)] = 0.0
    return a


def window_size(len_s: float, period_ms: int) -> int:
    if len_s * 1000 < period_ms:
        raise WindowTooShort(
            f"window of {len_s} s is shorter than the {period_ms} ms sampling period")
    return int(len_s * 1000 // period_ms)


def windows(trip: Trip, len_s: float, accel: Optional[np.ndarray] = None
            ) -> list[Window]:
    """Cut each segment into back-to-back windows of ``len_s`` seconds.

    A trailing remainder shorter than a full window is dropped.
    """
    k = window_size(len_s, trip.period_ms)
    if accel is None:
        accel = derive_acceleration(trip)
    dt = trip.intervals_s()
    out = []
    for a, b in trip.segments():
        for i in range(a, b - k + 1, k):
            chunk = trip.samples[i:i + k]
            out.append(Window(start_t=chunk[0].t,
                              end_t=chunk[0].t + k * trip.period_ms,
                              start_index=i,
                              samples=chunk,
                              accel=accel[i:i + k],
                              dt_s=dt[i:i + k]))
    return out


def concat(trips: Iterable[Trip]) -> Trip:
    """Join trips end to end, shifting times so each follows the previous
    one by a single nominal period."""
    trips = list(trips)
    period = trips[0].period_ms
    samples, starts, offset = [], [], 0
    for tr in trips:
        shift = offset - tr.samples[0].t
        base = len(samples)
        starts.extend(base + s for s in tr.segment_starts if s)
        samples.extend(replace(s, t=s.t + shift) for s in tr.samples)
        offset = samples[-1].t + period
    return Trip(tuple(samples), trips[0].vehicle, period, trips[0].capture_date,
                (0, *starts))
