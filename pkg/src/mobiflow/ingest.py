"""Parsing, validation and resampling of the three input table shapes.

* wide daily mobility index (one row per region, one column per day, baseline 100)
* wide weekly search-trend index (integers 0-100, with the censored token ``<1``)
* long origin-destination flow records with per-record region coordinates

Writers for each shape emit text that parses back to identical values.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CentroidConflictError,
    DegenerateScaleError,
    NegativeFlowError,
    ParseError,
    RangeError,
)

DAILY = "daily"
WEEKLY = "weekly"
CADENCE_DAYS = {DAILY: 1, WEEKLY: 7}

LESS_THAN_ONE = 0.5
CENSORED_TOKEN = "<1"

FLOW_COLUMNS = (
    "week_start",
    "origin",
    "destination",
    "visitor_flow",
    "population_flow",
    "origin_lat",
    "origin_lng",
    "dest_lat",
    "dest_lng",
)
FLOW_KINDS = ("visitor", "population")

_MDY = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{2}|\d{4})$")
_ISO = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


def parse_date(text: str) -> date:
    """Parse ``M/D/YY``, ``M/D/YYYY`` or ``YYYY-MM-DD``. Two-digit years are 20YY."""
    text = text.strip()
    m = _MDY.match(text)
    try:
        if m:
            month, day, year = (int(g) for g in m.groups())
            if len(m.group(3)) == 2:
                year += 2000
            return date(year, month, day)
        m = _ISO.match(text)
        if m:
            return date(*(int(g) for g in m.groups()))
    except ValueError:
        pass
    raise ValueError(f"unparseable date {text!r}")


def format_float(value: float) -> str:
    return repr(float(value))


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or math.isnan(self.lat):
            raise RangeError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0) or math.isnan(self.lon):
            raise RangeError(f"longitude {self.lon} outside [-180, 180]")

    def close_to(self, other: "GeoPoint", tol: float = 1e-9) -> bool:
        return abs(self.lat - other.lat) <= tol and abs(self.lon - other.lon) <= tol


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """One region's observations on a regular daily or weekly date grid."""

    region_id: str
    cadence: str
    dates: tuple
    values: np.ndarray

    def __post_init__(self):
        if self.cadence not in CADENCE_DAYS:
            raise ValueError(f"unknown cadence {self.cadence!r}")
        dates = tuple(self.dates)
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size != len(dates):
            raise ValueError("dates and values must be equal-length sequences")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.region_id}: missing or non-finite values")
        step = CADENCE_DAYS[self.cadence]
        for prev, cur in zip(dates, dates[1:]):
            gap = (cur - prev).days
            if gap <= 0:
                raise ValueError(f"{self.region_id}: dates not strictly increasing at {cur}")
            if gap != step:
                raise ValueError(
                    f"{self.region_id}: {gap}-day gap at {cur} breaks {self.cadence} cadence"
                )
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.region_id == other.region_id
            and self.cadence == other.cadence
            and self.dates == other.dates
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def points(self):
        return list(zip(self.dates, self.values.tolist()))

    @property
    def start(self) -> date:
        return self.dates[0]

    def value_at(self, day: date) -> float:
        idx = (day - self.dates[0]).days // CADENCE_DAYS[self.cadence]
        if idx < 0 or idx >= len(self.dates) or self.dates[idx] != day:
            raise KeyError(day)
        return float(self.values[idx])

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.region_id, self.cadence, self.dates, values)


@dataclass(frozen=True)
class FlowRecord:
    week_start: date
    origin: str
    destination: str
    visitor_flow: float
    population_flow: float

    def flow(self, kind: str) -> float:
        if kind == "visitor":
            return self.visitor_flow
        if kind == "population":
            return self.population_flow
        raise ValueError(f"unknown flow_kind {kind!r}; expected one of {FLOW_KINDS}")


@dataclass(frozen=True)
class WeeklyFlowTable:
    records: tuple
    centroids: Mapping[str, GeoPoint] = field(default_factory=dict)

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "centroids", dict(self.centroids))
        seen = set()
        for rec in records:
            for region in (rec.origin, rec.destination):
                if region not in self.centroids:
                    raise ParseError(f"region {region!r} has no centroid")
            if rec.visitor_flow < 0 or rec.population_flow < 0:
                raise NegativeFlowError(f"negative flow in record {rec}")
            key = (rec.week_start, rec.origin, rec.destination)
            if key in seen:
                raise ParseError(f"duplicate record for {key}")
            seen.add(key)
        weeks = self.weeks
        for prev, cur in zip(weeks, weeks[1:]):
            if (cur - prev).days % 7:
                raise ParseError(f"week_start {cur} is not on the weekly grid of {weeks[0]}")

    @property
    def weeks(self) -> list:
        return sorted({rec.week_start for rec in self.records})

    def week_records(self, week: date) -> list:
        return [rec for rec in self.records if rec.week_start == week]

    @property
    def regions(self) -> list:
        return sorted(self.centroids)


# -- wide tables -------------------------------------------------------------


def _read_rows(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise ParseError("empty table")
    return rows


def _parse_wide(text, cadence, cell_parser):
    rows = _read_rows(text)
    header = rows[0]
    if len(header) < 2:
        raise ParseError("header needs a region column and at least one date column", row=1)
    dates = []
    for col, cell in enumerate(header[1:], start=2):
        try:
            dates.append(parse_date(cell))
        except ValueError as exc:
            raise ParseError(str(exc), row=1, column=col) from None
    out = {}
    for rownum, row in enumerate(rows[1:], start=2):
        if not row or not any(c.strip() for c in row):
            continue
        region = row[0].strip()
        if not region:
            raise ParseError("empty region name", row=rownum, column=1)
        if region in out:
            raise ParseError(f"duplicate region {region!r}", row=rownum, column=1)
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, found {len(row)}", row=rownum
            )
        values = []
        for col, cell in enumerate(row[1:], start=2):
            cell = cell.strip()
            if not cell:
                raise ParseError("missing value", row=rownum, column=col)
            values.append(cell_parser(cell, rownum, col))
        try:
            out[region] = TimeSeries(region, cadence, dates, values)
        except ValueError as exc:
            raise ParseError(str(exc), row=rownum) from None
    return out


def _number(cell, row, col):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", row=row, column=col) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r}", row=row, column=col)
    return value


def parse_daily_mobility(text: str) -> dict:
    """Parse a wide daily mobility table into ``{region: TimeSeries}``."""
    return _parse_wide(text, DAILY, _number)


def _trend_parser(less_than_one):
    def parse(cell, row, col):
        if cell == CENSORED_TOKEN:
            return less_than_one
        value = _number(cell, row, col)
        if not 0.0 <= value <= 100.0:
            raise RangeError(f"trend value {cell} outside [0, 100]", row=row, column=col)
        return value

    return parse


def parse_weekly_trends(text: str, less_than_one: float = LESS_THAN_ONE) -> dict:
    """Parse a wide weekly search-trend table.

    Cells are 0-100; the censored token ``<1`` becomes ``less_than_one``.
    A ``Nationwide`` row, when present, is returned like any other region.
    """
    return _parse_wide(text, WEEKLY, _trend_parser(less_than_one))


def parse_daily_trends(text: str, less_than_one: float = LESS_THAN_ONE) -> dict:
    """Trend-index table already at daily cadence (same value rules as weekly)."""
    return _parse_wide(text, DAILY, _trend_parser(less_than_one))


def sniff_cadence(text: str) -> str:
    """Cadence of a wide table from the gap between its first two date columns."""
    header = _read_rows(text)[0]
    try:
        dates = [parse_date(c) for c in header[1:3]]
    except ValueError as exc:
        raise ParseError(str(exc), row=1) from None
    if len(dates) < 2:
        return DAILY
    return WEEKLY if (dates[1] - dates[0]).days == 7 else DAILY


def _format_wide(series: Iterable[TimeSeries], cell_formatter, label="region") -> str:
    series = list(series)
    if not series:
        raise ValueError("nothing to write")
    dates = series[0].dates
    for s in series:
        if s.dates != dates:
            raise ValueError(f"{s.region_id}: all series must share one date grid")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([label] + [d.isoformat() for d in dates])
    for s in series:
        writer.writerow([s.region_id] + [cell_formatter(v) for v in s.values])
    return buf.getvalue()


def format_daily_mobility(series: Iterable[TimeSeries]) -> str:
    return _format_wide(series, format_float)


def format_trends(series: Iterable[TimeSeries], less_than_one: float = LESS_THAN_ONE) -> str:
    """Inverse of :func:`parse_weekly_trends` / :func:`parse_daily_trends`."""

    def cell(v):
        if v == less_than_one:
            return CENSORED_TOKEN
        if float(v).is_integer():
            return str(int(v))
        return format_float(v)

    return _format_wide(series, cell)


# -- long flow table ---------------------------------------------------------


def parse_flow_records(text: str) -> WeeklyFlowTable:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty flow table") from None
    missing = [c for c in FLOW_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"missing columns {missing}", row=1)
    pos = {c: header.index(c) for c in FLOW_COLUMNS}
    records = []
    centroids: dict = {}
    for rownum, row in enumerate(reader, start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", row=rownum)

        def cell(name):
            value = row[pos[name]].strip()
            if not value:
                raise ParseError(f"missing {name}", row=rownum, column=pos[name] + 1)
            return value

        def num(name):
            return _number(cell(name), rownum, pos[name] + 1)

        try:
            week = parse_date(cell("week_start"))
        except ValueError as exc:
            raise ParseError(str(exc), row=rownum, column=pos["week_start"] + 1) from None
        origin, dest = cell("origin"), cell("destination")
        visitor, population = num("visitor_flow"), num("population_flow")
        for name, value in (("visitor_flow", visitor), ("population_flow", population)):
            if value < 0:
                raise NegativeFlowError(
                    f"negative {name} {value}", row=rownum, column=pos[name] + 1
                )
        for region, lat_col, lng_col in (
            (origin, "origin_lat", "origin_lng"),
            (dest, "dest_lat", "dest_lng"),
        ):
            try:
                point = GeoPoint(num(lat_col), num(lng_col))
            except RangeError as exc:
                raise RangeError(str(exc), row=rownum, column=pos[lat_col] + 1) from None
            known = centroids.setdefault(region, point)
            if not known.close_to(point):
                raise CentroidConflictError(
                    f"region {region!r} at {point} conflicts with earlier {known}",
                    row=rownum,
                    column=pos[lat_col] + 1,
                )
        records.append(FlowRecord(week, origin, dest, visitor, population))
    return WeeklyFlowTable(tuple(records), centroids)


def format_flow_records(table: WeeklyFlowTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FLOW_COLUMNS)
    c = table.centroids
    for r in table.records:
        o, d = c[r.origin], c[r.destination]
        writer.writerow(
            [
                r.week_start.isoformat(),
                r.origin,
                r.destination,
                format_float(r.visitor_flow),
                format_float(r.population_flow),
                format_float(o.lat),
                format_float(o.lon),
                format_float(d.lat),
                format_float(d.lon),
            ]
        )
    return buf.getvalue()


def merge_tables(tables: Sequence[WeeklyFlowTable]) -> WeeklyFlowTable:
    """Concatenate tables covering different weeks into one (centroids must agree)."""
    records = []
    centroids: dict = {}
    for t in tables:
        records.extend(t.records)
        for region, point in t.centroids.items():
            known = centroids.setdefault(region, point)
            if not known.close_to(point):
                raise CentroidConflictError(f"region {region!r} has conflicting centroids")
    return WeeklyFlowTable(tuple(records), centroids)


# -- transforms --------------------------------------------------------------


def minmax_scale(s: TimeSeries) -> TimeSeries:
    """Rescale values to [0, 1]; the minimum maps to exactly 0 and the maximum to exactly 1."""
    if len(s) < 2:
        raise DegenerateScaleError(f"{s.region_id}: need at least 2 points to scale")
    lo, hi = s.values.min(), s.values.max()
    if hi == lo:
        raise DegenerateScaleError(f"{s.region_id}: constant series cannot be min-max scaled")
    return s.with_values((s.values - lo) / (hi - lo))


def interpolate_weekly_to_daily(s: TimeSeries) -> TimeSeries:
    """Linear daily resampling between weekly anchors placed on each week_start date."""
    if s.cadence != WEEKLY:
        raise ValueError(f"{s.region_id}: expected weekly cadence, got {s.cadence}")
    v = s.values
    if len(v) == 1:
        return TimeSeries(s.region_id, DAILY, s.dates, v)
    frac = np.arange(7) / 7.0
    body = v[:-1, None] + (v[1:] - v[:-1])[:, None] * frac[None, :]
    values = np.append(body.ravel(), v[-1])
    start = s.dates[0]
    dates = [start + timedelta(days=i) for i in range(values.size)]
    return TimeSeries(s.region_id, DAILY, dates, values)
