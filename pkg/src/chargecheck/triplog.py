"""Multi-trip GPS records sampled at 1 s.

CSV layout (UTF-8, LF or CRLF)::

    trip,timestamp,speed_mps,altitude_m
    1,2024-07-07T10:23:59Z,3.4,0

Timestamps are ISO-8601 in UTC. Within a trip consecutive samples are exactly
one second apart; the gap between trips is unconstrained.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping, TextIO

import numpy as np

from .errors import TripLogError

HEADER = ("trip", "timestamp", "speed_mps", "altitude_m")


class Season(str, enum.Enum):
    SUMMER = "summer"
    WINTER = "winter"


# November-March is winter, everything else summer
DEFAULT_MONTH_MAP: Mapping[int, Season] = {
    m: (Season.WINTER if m in (11, 12, 1, 2, 3) else Season.SUMMER) for m in range(1, 13)
}


def month_map_from_winter(winter_months: Iterable[int]) -> dict[int, Season]:
    winter = set(winter_months)
    if not winter <= set(range(1, 13)):
        raise TripLogError(f"winter months must lie in 1..12, got {sorted(winter)}")
    return {m: (Season.WINTER if m in winter else Season.SUMMER) for m in range(1, 13)}


@dataclass(frozen=True)
class GpsSample:
    trip_number: int
    timestamp: datetime
    speed: float
    altitude: float


def parse_timestamp(text: str) -> int:
    """ISO-8601 UTC string -> integer POSIX seconds."""
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    elif dt.utcoffset() != timezone.utc.utcoffset(None):
        raise ValueError(f"timestamp is not UTC: {text!r}")
    if dt.microsecond:
        raise ValueError(f"timestamp has sub-second part: {text!r}")
    return int(dt.timestamp())


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True, eq=False)
class TripLog:
    """Validated, immutable GPS record of one certified interval.

    Stored column-wise: ``trip`` labels, ``time`` in POSIX seconds, ``speed``
    in m/s and ``altitude`` in m.
    """

    trip: np.ndarray
    time: np.ndarray
    speed: np.ndarray
    altitude: np.ndarray
    season: Season

    def __post_init__(self):
        for name, dtype in (("trip", np.int64), ("time", np.int64),
                            ("speed", np.float64), ("altitude", np.float64)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "season", Season(self.season))
        _validate(self.trip, self.time, self.speed, self.altitude)

    @classmethod
    def from_samples(cls, samples: Iterable[GpsSample], season: Season | None = None,
                     month_map: Mapping[int, Season] = DEFAULT_MONTH_MAP) -> "TripLog":
        rows = list(samples)
        if not rows:
            raise TripLogError("trip log is empty")
        times = [int(s.timestamp.replace(tzinfo=s.timestamp.tzinfo or timezone.utc).timestamp())
                 for s in rows]
        if season is None:
            season = infer_season(times, month_map)
        return cls(np.array([s.trip_number for s in rows]), np.array(times),
                   np.array([s.speed for s in rows]), np.array([s.altitude for s in rows]),
                   season)

    def __len__(self) -> int:
        return len(self.trip)

    def __eq__(self, other):
        if not isinstance(other, TripLog):
            return NotImplemented
        return (self.season == other.season
                and np.array_equal(self.trip, other.trip)
                and np.array_equal(self.time, other.time)
                and np.array_equal(self.speed, other.speed)
                and np.array_equal(self.altitude, other.altitude))

    @property
    def samples(self) -> Iterator[GpsSample]:
        for k, t, v, h in zip(self.trip, self.time, self.speed, self.altitude):
            yield GpsSample(int(k), datetime.fromtimestamp(int(t), tz=timezone.utc), float(v), float(h))

    def trip_labels(self) -> np.ndarray:
        return np.unique(self.trip)

    def step_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(v[t], v[t+1], h[t], h[t+1]) for every intra-trip 1 s step."""
        same = self.trip[1:] == self.trip[:-1]
        return (self.speed[:-1][same], self.speed[1:][same],
                self.altitude[:-1][same], self.altitude[1:][same])

    def trips(self) -> Iterator["TripLog"]:
        for label in self.trip_labels():
            m = self.trip == label
            yield TripLog(self.trip[m], self.time[m], self.speed[m], self.altitude[m], self.season)

    def with_season(self, season: Season) -> "TripLog":
        return TripLog(self.trip, self.time, self.speed, self.altitude, season)


def _validate(trip, time, speed, altitude) -> None:
    n = len(trip)
    if n == 0:
        raise TripLogError("trip log is empty")
    if not (len(time) == len(speed) == len(altitude) == n):
        raise TripLogError("column lengths differ")
    # rows are reported 1-based counting the header as row 1
    def row(i):
        return int(i) + 2

    bad = np.flatnonzero(~np.isfinite(speed) | ~np.isfinite(altitude))
    if bad.size:
        raise TripLogError("speed and altitude must be finite", row(bad[0]))
    bad = np.flatnonzero(trip < 1)
    if bad.size:
        raise TripLogError(f"trip number must be >= 1, got {trip[bad[0]]}", row(bad[0]))
    bad = np.flatnonzero(speed < 0)
    if bad.size:
        raise TripLogError(f"negative speed {speed[bad[0]]}", row(bad[0]))
    dk = np.diff(trip)
    bad = np.flatnonzero(dk < 0)
    if bad.size:
        raise TripLogError(f"trip number decreases from {trip[bad[0]]} to {trip[bad[0] + 1]}",
                           row(bad[0] + 1))
    dt = np.diff(time)
    bad = np.flatnonzero(dt <= 0)
    if bad.size:
        i = bad[0] + 1
        raise TripLogError(f"timestamps must strictly increase (trip {trip[i]}, "
                           f"{format_timestamp(time[i])})", row(i))
    bad = np.flatnonzero((dk == 0) & (dt != 1))
    if bad.size:
        i = bad[0] + 1
        raise TripLogError(f"spacing violation in trip {trip[i]} at {format_timestamp(time[i])}: "
                           f"samples are {dt[bad[0]]} s apart, expected 1 s", row(i))
    starts = np.flatnonzero(np.r_[True, dk != 0])
    sizes = np.diff(np.r_[starts, n])
    bad = np.flatnonzero(sizes < 2)
    if bad.size:
        i = starts[bad[0]]
        raise TripLogError(f"trip {trip[i]} has fewer than 2 samples", row(i))


def infer_season(timestamps, month_map: Mapping[int, Season] = DEFAULT_MONTH_MAP) -> Season:
    """Season of the interval, decided by the month of its first sample."""
    first = int(np.asarray(timestamps)[0])
    month = datetime.fromtimestamp(first, tz=timezone.utc).month
    return Season(month_map[month])


def trip_count(trip_log: TripLog) -> int:
    return len(trip_log.trip_labels())


def total_duration(trip_log: TripLog) -> int:
    """Cumulative driving time in seconds: samples minus one, summed over trips."""
    return len(trip_log) - trip_count(trip_log)


def parse_gps_csv(stream: TextIO | str, month_map: Mapping[int, Season] = DEFAULT_MONTH_MAP,
                  season: Season | None = None) -> TripLog:
    """Read and validate a GPS CSV. ``season=None`` infers it from the timestamps."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise TripLogError("empty file") from None
    if tuple(h.strip() for h in header) != HEADER:
        raise TripLogError(f"bad header {header!r}, expected {','.join(HEADER)}", 1)
    trip, time, speed, alt = [], [], [], []
    for rownum, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != 4:
            raise TripLogError(f"expected 4 fields, got {len(rec)}", rownum)
        try:
            trip.append(int(rec[0]))
            time.append(parse_timestamp(rec[1]))
            speed.append(float(rec[2]))
            alt.append(float(rec[3]))
        except ValueError as exc:
            raise TripLogError(f"malformed row: {exc}", rownum) from None
    if not trip:
        raise TripLogError("no data rows")
    if season is None:
        season = infer_season(time, month_map)
    return TripLog(np.array(trip), np.array(time), np.array(speed), np.array(alt), season)


def format_gps_csv(trip_log: TripLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for k, t, v, h in zip(trip_log.trip, trip_log.time, trip_log.speed, trip_log.altitude):
        w.writerow((int(k), format_timestamp(t), repr(float(v)), repr(float(h))))
    return buf.getvalue()


def read_gps_csv(path, month_map: Mapping[int, Season] = DEFAULT_MONTH_MAP,
                 season: Season | None = None) -> TripLog:
    with open(path, encoding="utf-8", newline="") as fh:
        try:
            return parse_gps_csv(fh, month_map, season)
        except TripLogError as exc:
            err = TripLogError(f"{path}: {exc}")
            err.row = exc.row
            raise err from None
