"""Wire formats shared by the HTTP service and the CLI.

Every response body is built here from the in-memory types and rendered
with one compact encoder, so a CLI export of a computation is byte-for-byte
the JSON the service would return for it. Timestamps never enter result
payloads; reruns of the same inputs therefore serialize identically.
"""

from __future__ import annotations

import json

from .errors import TaskError
from .geo import inverse_project
from .ingest import ValidationReport, parse_iso_date
from .shift import (
    DEFAULT_GRID_CELLS,
    Arrow,
    ShiftResult,
    ShiftTask,
    validate_task,
)
from .spatial import GridSpec, HexCell, ScalarField
from .temporal import (
    BANDS,
    FULL_DAY,
    AuxLine,
    DemandSeries,
    MeterStats,
    TimePeriod,
)

# Fraction of the arrow sampling spacing the strongest arrow occupies.
ARROW_LENGTH_FILL = 0.9


def dumps(obj) -> bytes:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False).encode("utf-8")


def grid_json(grid: GridSpec) -> dict:
    return {
        "nx": grid.nx,
        "ny": grid.ny,
        "x0": grid.x0,
        "y0": grid.y0,
        "dx": grid.dx,
        "dy": grid.dy,
    }


def period_json(period: TimePeriod) -> dict:
    return {
        "start": period.start.isoformat(),
        "end": period.end.isoformat(),
        "band": period.band,
    }


def scalar_field_json(field: ScalarField) -> dict:
    """{"grid", "scale_kwh", "values"}; values row-major, index i*ny + j."""
    return {
        "grid": grid_json(field.grid),
        "scale_kwh": field.scale_kwh,
        "values": field.values.ravel().tolist(),
    }


def _points_json(days, values) -> list[dict]:
    return [
        {"date": day.isoformat(), "value": float(value)}
        for day, value in zip(days, values)
    ]


def series_json(series: DemandSeries, aux: AuxLine | None = None, ratio=None) -> dict:
    """Stream-graph payload; aux and ratio blocks appear when requested."""
    body = {
        "series": {
            "total": _points_json(series.days, series.total),
            "peak": _points_json(series.days, series.peak),
            "valley": _points_json(series.days, series.valley),
        }
    }
    if aux is not None:
        body["aux"] = aux_json(aux, series)
    if ratio is not None:
        kind, points = ratio
        body["ratio"] = {
            "kind": kind,
            "points": [{"date": d.isoformat(), "value": float(v)} for d, v in points],
        }
    return body


def aux_json(aux: AuxLine, series: DemandSeries) -> dict:
    """Segment means plus the same means unrolled per day for plotting."""
    line = []
    for seg in aux.segments:
        for day in series.days:
            if seg.start <= day <= seg.end:
                line.append({"date": day.isoformat(), "value": float(seg.mean)})
    return {
        "granularity": aux.granularity,
        "segments": [
            {"start": s.start.isoformat(), "end": s.end.isoformat(), "mean": float(s.mean)}
            for s in aux.segments
        ],
        "line": line,
    }


def report_json(report: ValidationReport) -> dict:
    return {
        "accepted_count": report.accepted_count,
        "rejected": [{"line": line, "reason": reason} for line, reason in report.rejected],
        "warnings": [{"line": line, "reason": reason} for line, reason in report.warnings],
        "total_rows": report.total_rows,
    }


def meter_json(stats: MeterStats, period: TimePeriod) -> dict:
    return {
        "start": period.start.isoformat(),
        "end": period.end.isoformat(),
        "total": float(stats.total),
        "peak": float(stats.peak),
        "valley": float(stats.valley),
        "mean_daily": float(stats.mean_daily),
        "household_count": stats.household_count,
    }


def hexbin_json(
    cells: list[HexCell], period: TimePeriod, size: float, origin_lonlat
) -> dict:
    """Hexagon aggregates with centers in both planar meters and lon/lat."""
    origin_lon, origin_lat = origin_lonlat
    out = []
    total = 0.0
    for cell in cells:
        lon, lat = inverse_project(cell.center_x, cell.center_y, origin_lon, origin_lat)
        out.append(
            {
                "lon": float(lon),
                "lat": float(lat),
                "x": cell.center_x,
                "y": cell.center_y,
                "demand": cell.demand,
                "household_count": cell.household_count,
            }
        )
        total += cell.demand
    return {
        "start": period.start.isoformat(),
        "end": period.end.isoformat(),
        "band": period.band,
        "size": float(size),
        "total_demand": total,
        "cells": out,
    }


def arrows_geojson(
    arrows: tuple[Arrow, ...] | list[Arrow],
    grid: GridSpec,
    stride: int,
    origin_lonlat,
) -> dict:
    """FeatureCollection of LineStrings, one per arrow.

    Each line runs from the cell center along the arrow direction; its
    planar length is the magnitude relative to the strongest emitted arrow,
    scaled so that arrow spans at most ARROW_LENGTH_FILL of the sampling
    spacing. Coordinates are lon/lat; "magnitude" carries the raw value.
    """
    origin_lon, origin_lat = origin_lonlat
    features = []
    if arrows:
        peak = max(a.magnitude for a in arrows)
        full = ARROW_LENGTH_FILL * stride * min(grid.dx, grid.dy)
        for a in arrows:
            length = full * (a.magnitude / peak)
            x1 = a.x + a.dir_x * length
            y1 = a.y + a.dir_y * length
            lon0, lat0 = inverse_project(a.x, a.y, origin_lon, origin_lat)
            lon1, lat1 = inverse_project(x1, y1, origin_lon, origin_lat)
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [
                            [float(lon0), float(lat0)],
                            [float(lon1), float(lat1)],
                        ],
                    },
                    "properties": {"magnitude": a.magnitude},
                }
            )
    return {"type": "FeatureCollection", "features": features}


def result_json(result: ShiftResult, origin_lonlat) -> dict:
    """Full task output: one entry per period pair.

    phi is serialized in its kWh view (scale_kwh 1.0, values already kWh
    densities); created_at stays out so identical computations produce
    identical bytes.
    """
    pairs = []
    for pair in result.pairs:
        grid = pair.phi.grid
        pairs.append(
            {
                "label": pair.label,
                "period_a": period_json(pair.period_a),
                "period_b": period_json(pair.period_b),
                "phi": {
                    "grid": grid_json(grid),
                    "scale_kwh": 1.0,
                    "values": pair.phi.kwh.ravel().tolist(),
                },
                "nu": {
                    "grid": grid_json(grid),
                    "u": pair.nu.u.ravel().tolist(),
                    "v": pair.nu.v.ravel().tolist(),
                },
                "windows": [
                    {
                        "i": w.window_index[0],
                        "j": w.window_index[1],
                        "extent": [float(e) for e in w.extent],
                        "signed_change": w.signed_change,
                        "abs_change": w.abs_change,
                    }
                    for w in pair.windows
                ],
                "arrows": arrows_geojson(
                    pair.arrows, grid, result.arrow_stride, origin_lonlat
                ),
            }
        )
    return {
        "windows_x": result.windows_x,
        "windows_y": result.windows_y,
        "pairs": pairs,
    }


def badge_json(result: ShiftResult) -> list[dict]:
    """Window-change summaries per pair, for the task index."""
    badges = []
    for pair in result.pairs:
        badges.append(
            {
                "label": pair.label,
                "windows_x": result.windows_x,
                "windows_y": result.windows_y,
                "signed_change": [w.signed_change for w in pair.windows],
                "abs_change": [w.abs_change for w in pair.windows],
            }
        )
    return badges


def _period_from_json(obj, default_band=FULL_DAY) -> TimePeriod:
    if not isinstance(obj, dict):
        raise TaskError("period must be an object with start and end")
    try:
        start_text = obj["start"]
        end_text = obj["end"]
    except KeyError as exc:
        raise TaskError(f"period is missing {exc.args[0]!r}") from None
    start = parse_iso_date(str(start_text))
    end = parse_iso_date(str(end_text))
    if start is None or end is None:
        raise TaskError("period dates must be YYYY-MM-DD")
    band = obj.get("band", default_band)
    if band not in BANDS:
        raise TaskError(f"unknown band {band!r}")
    return TimePeriod(start, end, band)


def task_from_json(obj) -> ShiftTask:
    """Build and validate a ShiftTask from a request body.

    Accepted keys: kind, start, end, band, split_count, periods,
    grid (full GridSpec object), grid_cells, bandwidth ("auto" or meters).
    Anything malformed raises a DemandFlowError naming the offense.
    """
    if not isinstance(obj, dict):
        raise TaskError("task body must be a JSON object")
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise TaskError("task needs a string \"kind\"")

    base = None
    if "start" in obj or "end" in obj:
        if "start" not in obj or "end" not in obj:
            raise TaskError("a base period needs both start and end")
        base = _period_from_json(
            {"start": obj["start"], "end": obj["end"], "band": obj.get("band", FULL_DAY)}
        )
    elif "band" in obj and obj["band"] not in BANDS:
        raise TaskError(f"unknown band {obj['band']!r}")

    periods = tuple(_period_from_json(p) for p in obj.get("periods", []))

    grid = None
    if obj.get("grid") is not None:
        g = obj["grid"]
        if not isinstance(g, dict):
            raise TaskError("grid must be an object")
        try:
            grid = GridSpec(
                nx=int(g["nx"]),
                ny=int(g["ny"]),
                x0=float(g["x0"]),
                y0=float(g["y0"]),
                dx=float(g["dx"]),
                dy=float(g["dy"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TaskError(f"invalid grid: {exc}") from None

    grid_cells = obj.get("grid_cells", DEFAULT_GRID_CELLS)
    if not isinstance(grid_cells, int) or isinstance(grid_cells, bool):
        raise TaskError("grid_cells must be an integer")

    bandwidth = obj.get("bandwidth", "auto")
    if isinstance(bandwidth, bool) or not isinstance(bandwidth, (str, int, float)):
        raise TaskError("bandwidth must be \"auto\" or a number of meters")

    split_count = obj.get("split_count")
    if split_count is not None and (not isinstance(split_count, int) or isinstance(split_count, bool)):
        raise TaskError("split_count must be an integer")

    task = ShiftTask(
        kind=kind,
        base_period=base,
        split_count=split_count,
        periods=periods,
        grid=grid,
        grid_cells=grid_cells,
        bandwidth=bandwidth,
    )
    validate_task(task)
    return task
