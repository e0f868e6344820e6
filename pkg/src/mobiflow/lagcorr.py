"""Delay between an awareness signal and a mobility signal.

The mobility series is held fixed while the awareness series is shifted
forward one day at a time; the shift with the largest absolute Pearson
correlation is the delay. A positive shift means mobility lags awareness.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import InsufficientOverlapError, UndefinedCorrelationError
from .ingest import DAILY, WEEKLY, TimeSeries

DEFAULT_MAX_SHIFT = 30
MIN_OVERLAP = 3


@dataclass(frozen=True)
class LagResult:
    region_id: str
    best_shift: int
    r_at_best: float
    profile: tuple  # ((shift, r), ...) for shifts 0..max_shift
    overlap_length: int
    overlaps: tuple = ()

    def to_dict(self):
        return {
            "region": self.region_id,
            "best_shift": self.best_shift,
            "r_at_best": self.r_at_best,
            "overlap_length": self.overlap_length,
            "profile": [
                {"shift": d, "r": r, "overlap": n}
                for (d, r), n in zip(self.profile, self.overlaps or [None] * len(self.profile))
            ],
        }


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < MIN_OVERLAP:
        raise ValueError(f"need at least {MIN_OVERLAP} points, got {x.size}")
    r = kernels.pearson_kernel(x, y)
    if np.isnan(r):
        raise UndefinedCorrelationError("correlation undefined for a constant input")
    return float(r)


def best_lag(
    mobility: TimeSeries,
    awareness: TimeSeries,
    max_shift: int = DEFAULT_MAX_SHIFT,
    region_id: str | None = None,
) -> LagResult:
    """Scan shifts ``0..max_shift`` of ``awareness`` against fixed ``mobility``.

    Each shift correlates ``mobility(t)`` with ``awareness(t - shift)`` over the
    dates both series cover. Ties in ``|r|`` resolve to the smaller shift.
    """
    if mobility.cadence != DAILY or awareness.cadence != DAILY:
        raise ValueError("best_lag needs daily series; interpolate weekly data first")
    if max_shift < 0:
        raise ValueError("max_shift must be >= 0")
    offset = (mobility.start - awareness.start).days
    r, counts, status = kernels.lag_profile(
        np.ascontiguousarray(mobility.values),
        np.ascontiguousarray(awareness.values),
        offset,
        int(max_shift),
    )
    short = np.flatnonzero(status == kernels.LAG_SHORT)
    if short.size:
        d = int(short[0])
        raise InsufficientOverlapError(
            f"only {int(counts[d])} overlapping days at shift {d}; need {MIN_OVERLAP}"
        )
    flat = np.flatnonzero(status == kernels.LAG_FLAT)
    if flat.size:
        raise UndefinedCorrelationError("constant window", shift=int(flat[0]))
    # argmax returns the first maximum, i.e. the smallest tied shift
    best = int(np.argmax(np.abs(r)))
    return LagResult(
        region_id=region_id or mobility.region_id,
        best_shift=best,
        r_at_best=float(r[best]),
        profile=tuple((d, float(v)) for d, v in enumerate(r)),
        overlap_length=int(counts[best]),
        overlaps=tuple(int(c) for c in counts),
    )


def best_lags(
    pairs: Mapping[str, tuple],
    max_shift: int = DEFAULT_MAX_SHIFT,
    workers: int = 1,
) -> dict:
    """Run :func:`best_lag` per region. Returns ``{region: LagResult | Exception}``."""

    def one(item):
        region, (mob, aware) = item
        try:
            return region, best_lag(mob, aware, max_shift, region_id=region)
        except (InsufficientOverlapError, UndefinedCorrelationError, ValueError) as exc:
            return region, exc

    items = sorted(pairs.items())
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return dict(pool.map(one, items))
    return dict(map(one, items))


def lag_summary(results) -> dict:
    shifts = [res.best_shift for res in results]
    if not shifts:
        return {"regions": 0, "min_delay": None, "max_delay": None, "mean_delay": None}
    return {
        "regions": len(shifts),
        "min_delay": min(shifts),
        "max_delay": max(shifts),
        "mean_delay": sum(shifts) / len(shifts),
    }


def peak_offset(a, b) -> int:
    """Weeks from the peak of ``b`` to the peak of ``a`` (earliest peak on ties).

    Accepts weekly :class:`TimeSeries` on a shared weekly grid, or plain
    sequences already aligned index-by-index.
    """
    if isinstance(a, TimeSeries) and isinstance(b, TimeSeries):
        if a.cadence != WEEKLY or b.cadence != WEEKLY:
            raise ValueError("peak_offset needs weekly series")
        if not len(a) or not len(b):
            raise ValueError("empty series")
        if (a.start - b.start).days % 7:
            raise ValueError("series are not on the same weekly grid")
        da = a.dates[int(np.argmax(a.values))]
        db = b.dates[int(np.argmax(b.values))]
        return (da - db).days // 7
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty series")
    return int(np.argmax(a)) - int(np.argmax(b))
