"""Household consumption CSV ingestion and the immutable queryable dataset.

Input format: UTF-8 CSV with header
``household_id,date,pap_r,pap_r1,pap_r2,lon,lat``, one row per household-day.
pap_r is the total daily consumption in kWh, pap_r1 the peak-window
(06:00-22:00) share and pap_r2 the valley-window (22:00-06:00) share.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import (
    DuplicateRecordError,
    EmptyDatasetError,
    FormatError,
    LocationConflictError,
    StreamError,
)
from .geo import project_coordinates

CSV_HEADER = ("household_id", "date", "pap_r", "pap_r1", "pap_r2", "lon", "lat")

# Relative tolerance for |pap_r - (pap_r1 + pap_r2)|; meters round, so a
# small mismatch is a warning by default and a rejection only in strict mode.
DEFAULT_CONSISTENCY_TOL = 0.01


@dataclass(frozen=True)
class ConsumptionRecord:
    """One household-day of metered energy with the household location."""

    household_id: str
    date: date
    pap_r: float  # total daily kWh
    pap_r1: float  # peak window kWh
    pap_r2: float  # valley window kWh
    lon: float
    lat: float


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of one parse: counts plus per-line rejection/warning reasons."""

    accepted_count: int
    rejected: tuple[tuple[int, str], ...]
    warnings: tuple[tuple[int, str], ...]

    @property
    def total_rows(self) -> int:
        return self.accepted_count + len(self.rejected)


def parse_iso_date(text):
    """Strict YYYY-MM-DD parse; returns None on any deviation."""
    if len(text) != 10 or text[4] != "-" or text[7] != "-":
        return None
    y, m, d = text[:4], text[5:7], text[8:10]
    if not (y.isdigit() and m.isdigit() and d.isdigit()):
        return None
    try:
        return date(int(y), int(m), int(d))
    except ValueError:
        return None


def _validate_row(row, consistency_tol):
    """Turn one CSV row into (record, warning_reason) or raise _RowError."""
    if len(row) != 7:
        raise _RowError(f"expected 7 columns, got {len(row)}")
    household_id = row[0].strip()
    if not household_id:
        raise _RowError("empty household_id")
    day = parse_iso_date(row[1].strip())
    if day is None:
        raise _RowError("invalid date (expected YYYY-MM-DD)")

    numbers = []
    for name, text in zip(CSV_HEADER[2:], row[2:]):
        try:
            value = float(text)
        except ValueError:
            raise _RowError(f"invalid number in column {name}") from None
        if not math.isfinite(value):
            raise _RowError(f"non-finite value in column {name}")
        numbers.append(value)
    pap_r, pap_r1, pap_r2, lon, lat = numbers

    for name, value in (("pap_r", pap_r), ("pap_r1", pap_r1), ("pap_r2", pap_r2)):
        if value < 0:
            raise _RowError(f"negative energy value in column {name}")
    if not -90.0 <= lat <= 90.0:
        raise _RowError("latitude out of range")
    if not -180.0 <= lon <= 180.0:
        raise _RowError("longitude out of range")

    warning = None
    mismatch = abs(pap_r - (pap_r1 + pap_r2))
    if mismatch > consistency_tol * max(pap_r, 1.0):
        if pap_r1 + pap_r2 > pap_r:
            warning = "peak+valley exceeds total"
        else:
            warning = "peak+valley falls short of total"

    record = ConsumptionRecord(household_id, day, pap_r, pap_r1, pap_r2, lon, lat)
    return record, warning


class _RowError(Exception):
    pass


def _read_text(source) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        return source
    else:
        try:
            data = source.read()
        except OSError as exc:
            raise StreamError(f"unreadable input stream: {exc}") from exc
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise StreamError(f"input is not valid UTF-8: {exc}") from exc


def parse_consumption_csv(
    source,
    strict: bool = False,
    consistency_tol: float = DEFAULT_CONSISTENCY_TOL,
) -> tuple[list[ConsumptionRecord], ValidationReport]:
    """Parse a consumption CSV into records plus a validation report.

    `source` may be bytes, text, or a file-like object. Malformed rows are
    rejected with a per-line reason. Rows whose peak+valley disagrees with
    the daily total beyond `consistency_tol` (relative to max(pap_r, 1)) are
    kept with a warning, or rejected when `strict` is set.

    Raises StreamError / FormatError for unreadable input or a bad header,
    and EmptyDatasetError (carrying the report) when no row is accepted.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty input: missing header row") from None
    if tuple(cell.strip() for cell in header) != CSV_HEADER:
        raise FormatError(
            "invalid header: expected " + ",".join(CSV_HEADER)
        )

    records: list[ConsumptionRecord] = []
    rejected: list[tuple[int, str]] = []
    warnings: list[tuple[int, str]] = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue  # blank line, not a data row
        try:
            record, warning = _validate_row(row, consistency_tol)
        except _RowError as exc:
            rejected.append((line, str(exc)))
            continue
        if warning is not None:
            if strict:
                rejected.append((line, warning))
                continue
            warnings.append((line, warning))
        records.append(record)

    report = ValidationReport(len(records), tuple(rejected), tuple(warnings))
    if not records:
        raise EmptyDatasetError("no rows were accepted", report=report)
    return records, report


class Dataset:
    """Immutable indexed view over validated consumption records.

    Records are stored columnar (household index, day ordinal, the three
    energy columns) and sorted by (household_id, date); all derived queries
    are therefore deterministic. Each household has exactly one location,
    projected to local planar meters around the dataset centroid.
    """

    def __init__(self, records):
        records = list(records)
        if not records:
            raise EmptyDatasetError("cannot build a dataset from zero records")

        locations: dict[str, tuple[float, float]] = {}
        seen: set[tuple[str, int]] = set()
        for rec in records:
            key = (rec.household_id, rec.date.toordinal())
            if key in seen:
                raise DuplicateRecordError(
                    f"duplicate record for household {rec.household_id!r} "
                    f"on {rec.date.isoformat()}"
                )
            seen.add(key)
            loc = (rec.lon, rec.lat)
            prior = locations.setdefault(rec.household_id, loc)
            if prior != loc:
                raise LocationConflictError(
                    f"household {rec.household_id!r} has conflicting locations "
                    f"{prior} and {loc}"
                )

        self._household_ids = tuple(sorted(locations))
        index_of = {hid: i for i, hid in enumerate(self._household_ids)}
        self._hh_lon = np.array([locations[h][0] for h in self._household_ids])
        self._hh_lat = np.array([locations[h][1] for h in self._household_ids])

        order = sorted(range(len(records)), key=lambda k: (records[k].household_id, records[k].date))
        self._rec_hh = np.array([index_of[records[k].household_id] for k in order], dtype=np.intp)
        self._rec_day = np.array([records[k].date.toordinal() for k in order], dtype=np.int64)
        self._rec_total = np.array([records[k].pap_r for k in order])
        self._rec_peak = np.array([records[k].pap_r1 for k in order])
        self._rec_valley = np.array([records[k].pap_r2 for k in order])

        self._origin = (float(np.mean(self._hh_lon)), float(np.mean(self._hh_lat)))
        self._hh_x, self._hh_y = project_coordinates(
            self._hh_lon, self._hh_lat, self._origin[0], self._origin[1]
        )
        self._bbox = (
            float(self._hh_x.min()),
            float(self._hh_y.min()),
            float(self._hh_x.max()),
            float(self._hh_y.max()),
        )
        for arr in (
            self._hh_lon, self._hh_lat, self._rec_hh, self._rec_day,
            self._rec_total, self._rec_peak, self._rec_valley,
            self._hh_x, self._hh_y,
        ):
            arr.setflags(write=False)

    # -- basic views ------------------------------------------------------

    @property
    def household_ids(self) -> tuple[str, ...]:
        return self._household_ids

    @property
    def households(self) -> dict[str, tuple[float, float]]:
        """household_id -> (lon, lat)."""
        return {
            hid: (float(self._hh_lon[i]), float(self._hh_lat[i]))
            for i, hid in enumerate(self._household_ids)
        }

    @property
    def record_count(self) -> int:
        return int(self._rec_day.size)

    @property
    def date_range(self) -> tuple[date, date]:
        return (
            date.fromordinal(int(self._rec_day.min())),
            date.fromordinal(int(self._rec_day.max())),
        )

    @property
    def origin_lonlat(self) -> tuple[float, float]:
        """Projection origin: the centroid of the household locations."""
        return self._origin

    @property
    def bounding_box(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) of household positions, planar meters."""
        return self._bbox

    @property
    def household_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Planar household positions aligned with `household_ids`."""
        return self._hh_x, self._hh_y

    def records(self):
        """Yield the records in (household_id, date) order."""
        for k in range(self.record_count):
            yield ConsumptionRecord(
                self._household_ids[self._rec_hh[k]],
                date.fromordinal(int(self._rec_day[k])),
                float(self._rec_total[k]),
                float(self._rec_peak[k]),
                float(self._rec_valley[k]),
                float(self._hh_lon[self._rec_hh[k]]),
                float(self._hh_lat[self._rec_hh[k]]),
            )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self._household_ids == other._household_ids
            and np.array_equal(self._hh_lon, other._hh_lon)
            and np.array_equal(self._hh_lat, other._hh_lat)
            and np.array_equal(self._rec_hh, other._rec_hh)
            and np.array_equal(self._rec_day, other._rec_day)
            and np.array_equal(self._rec_total, other._rec_total)
            and np.array_equal(self._rec_peak, other._rec_peak)
            and np.array_equal(self._rec_valley, other._rec_valley)
        )

    __hash__ = None

    # -- period queries ----------------------------------------------------

    def _band_values(self, band: str) -> np.ndarray:
        try:
            return {
                "full_day": self._rec_total,
                "peak_window": self._rec_peak,
                "valley_window": self._rec_valley,
            }[band]
        except KeyError:
            raise ValueError(f"unknown band {band!r}") from None

    def _period_mask(self, start: date, end: date) -> np.ndarray:
        d0, d1 = start.toordinal(), end.toordinal()
        return (self._rec_day >= d0) & (self._rec_day <= d1)

    def daily_arrays(self):
        """(first_day, total, peak, valley) with one slot per calendar day
        of the date range; days without records hold zero."""
        first, last = self.date_range
        n_days = last.toordinal() - first.toordinal() + 1
        offsets = self._rec_day - first.toordinal()
        total = np.bincount(offsets, weights=self._rec_total, minlength=n_days)
        peak = np.bincount(offsets, weights=self._rec_peak, minlength=n_days)
        valley = np.bincount(offsets, weights=self._rec_valley, minlength=n_days)
        return first, total, peak, valley

    def period_sums(self, start: date, end: date):
        """(total, peak, valley, household_count) over records in [start, end]."""
        mask = self._period_mask(start, end)
        count = int(np.unique(self._rec_hh[mask]).size)
        return (
            float(self._rec_total[mask].sum()),
            float(self._rec_peak[mask].sum()),
            float(self._rec_valley[mask].sum()),
            count,
        )

    def household_demand(self, start: date, end: date, band: str):
        """Per-household band demand summed over [start, end].

        Returns (demand, record_counts), both aligned with `household_ids`;
        record_counts says how many records each household has in the period.
        """
        mask = self._period_mask(start, end)
        n = len(self._household_ids)
        values = self._band_values(band)[mask]
        hh = self._rec_hh[mask]
        demand = np.bincount(hh, weights=values, minlength=n)
        counts = np.bincount(hh, minlength=n)
        return demand, counts

    def to_csv(self) -> str:
        """Serialize back to the ingest CSV format (round-trips exactly)."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in self.records():
            # repr() keeps the shortest digits that reparse to the same float
            writer.writerow(
                (
                    rec.household_id,
                    rec.date.isoformat(),
                    repr(rec.pap_r),
                    repr(rec.pap_r1),
                    repr(rec.pap_r2),
                    repr(rec.lon),
                    repr(rec.lat),
                )
            )
        return out.getvalue()


def build_dataset(records) -> Dataset:
    """Index validated records into an immutable Dataset.

    Raises DuplicateRecordError for repeated (household, date) keys,
    LocationConflictError when a household moves, and EmptyDatasetError
    for an empty record list.
    """
    return Dataset(records)


def iter_days(start: date, end: date):
    """Inclusive day range."""
    day = start
    one = timedelta(days=1)
    while day <= end:
        yield day
        day += one
