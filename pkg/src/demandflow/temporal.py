"""Daily demand series, auxiliary aggregate lines, ratio curves, and meter stats.

All operations are pure functions of an immutable Dataset, so they are safe
to evaluate concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from itertools import groupby

import numpy as np

from .errors import PeriodError
from .ingest import Dataset

FULL_DAY = "full_day"
PEAK_WINDOW = "peak_window"
VALLEY_WINDOW = "valley_window"
BANDS = (FULL_DAY, PEAK_WINDOW, VALLEY_WINDOW)

YEARLY = "yearly"
QUARTERLY = "quarterly"
MONTHLY = "monthly"
GRANULARITIES = (YEARLY, QUARTERLY, MONTHLY)

PEAK_TO_VALLEY = "peak_to_valley"
PEAK_TO_TOTAL = "peak_to_total"
RATIO_KINDS = (PEAK_TO_VALLEY, PEAK_TO_TOTAL)


@dataclass(frozen=True)
class TimePeriod:
    """Inclusive day range plus the metered band it selects."""

    start: date
    end: date
    band: str = FULL_DAY

    def __post_init__(self):
        if self.start > self.end:
            raise PeriodError(
                f"period start {self.start.isoformat()} is after end {self.end.isoformat()}"
            )
        if self.band not in BANDS:
            raise PeriodError(f"unknown band {self.band!r}")

    @property
    def n_days(self) -> int:
        return (self.end - self.start).days + 1

    def overlaps(self, other: "TimePeriod") -> bool:
        return self.start <= other.end and other.start <= self.end


@dataclass(frozen=True)
class DemandSeries:
    """Per-day totals across the dataset; four parallel arrays of equal length."""

    days: tuple[date, ...]
    total: np.ndarray
    peak: np.ndarray
    valley: np.ndarray

    def __post_init__(self):
        for arr in (self.total, self.peak, self.valley):
            arr.setflags(write=False)
        if not (len(self.days) == self.total.size == self.peak.size == self.valley.size):
            raise ValueError("series arrays must have equal lengths")


@dataclass(frozen=True)
class AuxSegment:
    start: date
    end: date
    mean: float


@dataclass(frozen=True)
class AuxLine:
    """Calendar-aligned averages of daily totals at one granularity."""

    granularity: str
    segments: tuple[AuxSegment, ...]


@dataclass(frozen=True)
class MeterStats:
    """Aggregate demand overview for a brushed period."""

    total: float
    peak: float
    valley: float
    mean_daily: float
    household_count: int


def daily_series(dataset: Dataset) -> DemandSeries:
    """Sum demand per calendar day over the whole date range.

    Days without any record appear with zeros, so the series always spans
    the range contiguously.
    """
    first, total, peak, valley = dataset.daily_arrays()
    days = tuple(first + timedelta(days=k) for k in range(total.size))
    return DemandSeries(days, total, peak, valley)


def _bucket_key(day: date, granularity: str):
    if granularity == YEARLY:
        return (day.year,)
    if granularity == QUARTERLY:
        return (day.year, (day.month - 1) // 3)
    if granularity == MONTHLY:
        return (day.year, day.month)
    raise ValueError(f"unknown granularity {granularity!r}")


def aux_lines(series: DemandSeries, granularity: str) -> AuxLine:
    """Average the daily totals over calendar years, quarters, or months.

    Segments partition the series range; a partial first or last bucket is
    averaged over the days actually present.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    segments = []
    idx = 0
    for _, group in groupby(series.days, key=lambda d: _bucket_key(d, granularity)):
        days = list(group)
        n = len(days)
        mean = float(np.mean(series.total[idx : idx + n]))
        segments.append(AuxSegment(days[0], days[-1], mean))
        idx += n
    return AuxLine(granularity, tuple(segments))


def ratio_series(series: DemandSeries, kind: str) -> list[tuple[date, float]]:
    """Per-day peak/valley or peak/total ratio.

    Days with a zero denominator are omitted rather than emitted as a
    sentinel, which keeps downstream plots finite.
    """
    if kind == PEAK_TO_VALLEY:
        denominator = series.valley
    elif kind == PEAK_TO_TOTAL:
        denominator = series.total
    else:
        raise ValueError(f"unknown ratio kind {kind!r}")
    out = []
    for day, num, den in zip(series.days, series.peak, denominator):
        if den != 0.0:
            out.append((day, float(num / den)))
    return out


def meter_stats(dataset: Dataset, period: TimePeriod) -> MeterStats:
    """Total, peak, valley, and average daily demand over a period.

    mean_daily divides by calendar days in the period (not record days), so
    sparse data reads as low demand.
    """
    first, last = dataset.date_range
    if period.start < first or period.end > last:
        raise PeriodError(
            f"period {period.start.isoformat()}..{period.end.isoformat()} is outside "
            f"the dataset range {first.isoformat()}..{last.isoformat()}"
        )
    total, peak, valley, count = dataset.period_sums(period.start, period.end)
    return MeterStats(
        total=total,
        peak=peak,
        valley=valley,
        mean_daily=total / period.n_days,
        household_count=count,
    )
