"""Seeded synthetic fixtures with known ground truth.

Every generator is bit-deterministic in its arguments and returns the ground
truth alongside the data so tests and the ``synth`` command can check
recovery against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import NamedTuple, Sequence

import numpy as np

from .cluster import derive_seed
from .ingest import (
    DAILY,
    FlowRecord,
    GeoPoint,
    TimeSeries,
    WeeklyFlowTable,
    format_daily_mobility,
    format_flow_records,
    format_trends,
    merge_tables,
)

JITTER = 0.10
DEFAULT_START = date(2020, 1, 13)
DEFAULT_WEEK = date(2020, 3, 2)


class LaggedPair(NamedTuple):
    awareness: TimeSeries
    mobility: TimeSeries
    truth: dict


class PlantedFlows(NamedTuple):
    table: WeeklyFlowTable
    truth: dict


class TwoWeekPair(NamedTuple):
    week_a: WeeklyFlowTable
    week_b: WeeklyFlowTable
    truth: dict


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    blocks: tuple = (10, 10, 10)
    intra_w: float = 100.0
    inter_w: float = 1.0
    geo_centers: tuple = ()
    geo_spread_km: float = 100.0
    week_start: date = DEFAULT_WEEK
    prefix: str = "R"

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        centers = tuple(
            c if isinstance(c, GeoPoint) else GeoPoint(*c) for c in self.geo_centers
        )
        if not centers:
            centers = default_centers(len(self.blocks))
        object.__setattr__(self, "geo_centers", centers)
        if not self.blocks or min(self.blocks) < 1:
            raise ValueError("blocks must be positive sizes")
        if not self.intra_w > self.inter_w > 0:
            raise ValueError("need intra_w > inter_w > 0")
        if len(centers) != len(self.blocks):
            raise ValueError("one geo center per block")
        if not self.geo_spread_km > 0:
            raise ValueError("geo_spread_km must be positive")


def default_centers(k: int) -> tuple:
    """``k`` centres spaced along the 39th parallel across the continental US."""
    if k == 1:
        return (GeoPoint(39.0, -98.0),)
    lons = np.linspace(-120.0, -75.0, k)
    return tuple(GeoPoint(39.0, float(lon)) for lon in lons)


def _walk(rng, length):
    w = np.cumsum(rng.standard_normal(length))
    return (w - w.min()) / (w.max() - w.min())


def gen_lagged_pair(
    length: int,
    lag: int,
    noise_sigma: float,
    seed: int,
    start: date = DEFAULT_START,
    region_id: str = "R",
) -> LaggedPair:
    """Random-walk awareness and a mobility series that mirrors it ``lag`` days later.

    ``mobility(t) = -awareness(t - lag) + N(0, noise_sigma)`` on the days where
    ``t - lag`` is covered. The walk is drawn before the noise, so the
    awareness series does not depend on ``noise_sigma``.
    """
    if lag < 0:
        raise ValueError("lag must be >= 0")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    if length <= lag + 3:
        raise ValueError(f"length {length} too small for lag {lag}")
    rng = np.random.default_rng(seed)
    a = _walk(rng, length)
    noise = rng.standard_normal(length - lag) * noise_sigma
    dates = [start + timedelta(days=i) for i in range(length)]
    awareness = TimeSeries(region_id, DAILY, dates, a)
    mobility = TimeSeries(region_id, DAILY, dates[lag:], -a[: length - lag] + noise)
    truth = {"region": region_id, "lag": lag, "noise_sigma": noise_sigma, "seed": seed}
    return LaggedPair(awareness, mobility, truth)


def _offset_point(rng, center: GeoPoint, spread_km: float) -> GeoPoint:
    # uniform over the spherical cap of radius spread_km
    r = spread_km * math.sqrt(rng.random())
    theta = 2 * math.pi * rng.random()
    delta = r / 6371.0088
    phi1, lam1 = math.radians(center.lat), math.radians(center.lon)
    phi2 = math.asin(
        math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    )
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * math.sin(phi2),
    )
    lon = (math.degrees(lam2) + 540.0) % 360.0 - 180.0
    return GeoPoint(max(-90.0, min(90.0, math.degrees(phi2))), lon)


def _layout(spec: SynthSpec):
    rng = np.random.default_rng(derive_seed(spec.seed, 0))
    regions, block_of, centroids, scale = [], {}, {}, {}
    total = sum(spec.blocks)
    width = max(3, len(str(total - 1)))
    for b, size in enumerate(spec.blocks):
        for _ in range(size):
            region = f"{spec.prefix}{len(regions):0{width}d}"
            regions.append(region)
            block_of[region] = b
            centroids[region] = _offset_point(rng, spec.geo_centers[b], spec.geo_spread_km)
    for region in regions:
        scale[region] = float(rng.uniform(5.0, 15.0))
    return regions, block_of, centroids, scale


def _week_records(spec, layout, week, inter_factor, rng):
    regions, block_of, _, scale = layout
    records = []
    for o in regions:
        for d in regions:
            if o == d:
                continue
            intra = block_of[o] == block_of[d]
            base = spec.intra_w if intra else spec.inter_w
            flow = base * rng.uniform(1.0 - JITTER, 1.0 + JITTER)
            if not intra:
                flow *= inter_factor
            records.append(FlowRecord(week, o, d, flow, flow * scale[o]))
    return records


def _truth(spec: SynthSpec, layout) -> dict:
    regions, block_of, centroids, _ = layout
    return {
        "seed": spec.seed,
        "blocks": list(spec.blocks),
        "intra_w": spec.intra_w,
        "inter_w": spec.inter_w,
        "geo_spread_km": spec.geo_spread_km,
        "geo_centers": [[c.lat, c.lon] for c in spec.geo_centers],
        "assignment": {r: block_of[r] for r in regions},
    }


def gen_planted_flow_network(
    blocks: Sequence[int],
    intra_w: float,
    inter_w: float,
    geo_centers: Sequence = (),
    geo_spread_km: float = 100.0,
    seed: int = 0,
    week_start: date = DEFAULT_WEEK,
) -> PlantedFlows:
    """Complete directed flow table over planted blocks (one week).

    Directed flows are ``intra_w`` inside a block and ``inter_w`` across
    blocks, each jittered uniformly by +/-10%. Region centroids fall within
    ``geo_spread_km`` of their block's centre.
    """
    spec = SynthSpec(seed, tuple(blocks), intra_w, inter_w, tuple(geo_centers), geo_spread_km, week_start)
    return gen_from_spec(spec)


def gen_from_spec(spec: SynthSpec) -> PlantedFlows:
    layout = _layout(spec)
    rng = np.random.default_rng(derive_seed(spec.seed, 1))
    records = _week_records(spec, layout, spec.week_start, 1.0, rng)
    return PlantedFlows(WeeklyFlowTable(tuple(records), layout[2]), _truth(spec, layout))


def gen_two_week_pair(base: SynthSpec, isolation_factor: float, weeks_apart: int = 5) -> TwoWeekPair:
    """Week A from ``base``; week B is A with every inter-block flow scaled by the factor."""
    if not 0 < isolation_factor <= 1:
        raise ValueError("isolation_factor must lie in (0, 1]")
    week_a, truth = gen_from_spec(base)
    blocks = truth["assignment"]
    later = base.week_start + timedelta(days=7 * weeks_apart)
    recs = []
    for r in week_a.records:
        f = 1.0 if blocks[r.origin] == blocks[r.destination] else isolation_factor
        recs.append(FlowRecord(later, r.origin, r.destination, r.visitor_flow * f, r.population_flow * f))
    week_b = WeeklyFlowTable(tuple(recs), week_a.centroids)
    truth = dict(truth, isolation_factor=isolation_factor, week_a=str(base.week_start), week_b=str(later))
    return TwoWeekPair(week_a, week_b, truth)


def gen_panel(base: SynthSpec, inter_factors: Sequence[float]) -> PlantedFlows:
    """Consecutive weeks with inter-block flows scaled week by week."""
    layout = _layout(base)
    records = []
    for i, factor in enumerate(inter_factors):
        rng = np.random.default_rng(derive_seed(base.seed, 100 + i))
        week = base.week_start + timedelta(days=7 * i)
        records.extend(_week_records(base, layout, week, float(factor), rng))
    truth = dict(_truth(base, layout), inter_factors=[float(f) for f in inter_factors])
    return PlantedFlows(WeeklyFlowTable(tuple(records), layout[2]), truth)


# -- fixture files -----------------------------------------------------------


@dataclass
class LagFixture:
    mobility: list = field(default_factory=list)
    awareness: list = field(default_factory=list)
    truth: dict = field(default_factory=dict)


def gen_lag_fixture(
    lags: dict,
    length: int = 190,
    noise_sigma: float = 0.0,
    seed: int = 0,
    start: date = DEFAULT_START,
) -> LagFixture:
    """One lagged pair per region, trimmed to one shared date grid per file.

    Awareness keeps the full span; mobility is cut to start ``max(lags)`` days
    in so every region fits a single wide table.
    """
    if not lags:
        raise ValueError("need at least one region")
    cut = max(lags.values())
    fx = LagFixture(truth={"seed": seed, "length": length, "noise_sigma": noise_sigma, "lags": {}})
    for i, region in enumerate(sorted(lags)):
        pair = gen_lagged_pair(length, lags[region], noise_sigma, derive_seed(seed, i), start, region)
        mob = pair.mobility
        skip = cut - lags[region]
        fx.awareness.append(pair.awareness.with_values(pair.awareness.values * 100.0))
        fx.mobility.append(
            TimeSeries(region, DAILY, mob.dates[skip:], 100.0 + 100.0 * mob.values[skip:])
        )
        fx.truth["lags"][region] = lags[region]
    shifts = list(fx.truth["lags"].values())
    fx.truth["mean_lag"] = sum(shifts) / len(shifts)
    return fx


def fixture_files(spec: dict) -> tuple:
    """Render a synth job (the JSON accepted by ``mobiflow synth``) to file texts.

    Returns ``(files, truth)`` where ``files`` maps file name to text.
    """
    seed = int(spec.get("seed", 0))
    files, truth = {}, {"seed": seed}
    if "lag" in spec:
        lag = spec["lag"]
        fx = gen_lag_fixture(
            {str(k): int(v) for k, v in lag["regions"].items()},
            length=int(lag.get("length", 190)),
            noise_sigma=float(lag.get("noise_sigma", 0.0)),
            seed=seed,
            start=date.fromisoformat(lag.get("start", DEFAULT_START.isoformat())),
        )
        files["mobility.csv"] = format_daily_mobility(fx.mobility)
        files["trends.csv"] = format_trends(fx.awareness)
        truth["lag"] = fx.truth
    if "flows" in spec:
        fl = spec["flows"]
        base = SynthSpec(
            seed=seed,
            blocks=tuple(fl.get("blocks", (10, 10, 10))),
            intra_w=float(fl.get("intra_w", 100.0)),
            inter_w=float(fl.get("inter_w", 1.0)),
            geo_centers=tuple(tuple(c) for c in fl.get("geo_centers", ())),
            geo_spread_km=float(fl.get("geo_spread_km", 100.0)),
            week_start=date.fromisoformat(fl.get("week_start", DEFAULT_WEEK.isoformat())),
        )
        panel = gen_panel(base, fl.get("inter_factors", [1.0]))
        files["flows.csv"] = format_flow_records(panel.table)
        truth["flows"] = panel.truth
    if not files:
        raise ValueError("synth spec needs a 'lag' and/or 'flows' section")
    return files, truth


__all__ = [
    "LaggedPair",
    "PlantedFlows",
    "SynthSpec",
    "TwoWeekPair",
    "fixture_files",
    "gen_from_spec",
    "gen_lag_fixture",
    "gen_lagged_pair",
    "gen_panel",
    "gen_planted_flow_network",
    "gen_two_week_pair",
    "merge_tables",
]
