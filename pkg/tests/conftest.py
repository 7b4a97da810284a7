"""Shared test fixtures and the independent KDE oracle.

The oracle is deliberately dumb: pure-Python loops, math.exp, and a 2x2
adjugate inverse, sharing no code path with the production evaluator. Field
tests compare against it rather than against frozen arrays.
"""

import datetime as dt
import math

import numpy as np
import pytest

from demandflow import ConsumptionRecord, build_dataset

CSV_HEADER = "household_id,date,pap_r,pap_r1,pap_r2,lon,lat"

# Shanghai-ish anchor used by most synthetic datasets.
BASE_LON = 121.5
BASE_LAT = 31.2
DAY0 = dt.date(2019, 7, 1)


def kde_oracle(px, py, weights, grid, H):
    """Direct O(points x cells) evaluation of the weighted Gaussian mixture.

    Returns a list of nx lists of ny floats.
    """
    h11, h12 = float(H[0][0]), float(H[0][1])
    h21, h22 = float(H[1][0]), float(H[1][1])
    det = h11 * h22 - h12 * h21
    ia, ib, ic = h22 / det, -h12 / det, h11 / det  # adjugate / det
    norm = 1.0 / (2.0 * math.pi * math.sqrt(det))
    out = []
    for i in range(grid.nx):
        cx = grid.x0 + (i + 0.5) * grid.dx
        row = []
        for j in range(grid.ny):
            cy = grid.y0 + (j + 0.5) * grid.dy
            s = 0.0
            for x, y, w in zip(px, py, weights):
                ux = cx - x
                uy = cy - y
                q = ia * ux * ux + 2.0 * ib * ux * uy + ic * uy * uy
                s += w * math.exp(-0.5 * q)
            row.append(norm * s)
        out.append(row)
    return out


def dyadic(k):
    """k/1024: exactly representable, so sums of these are exact in float64."""
    return k / 1024.0


def csv_text(rows):
    return CSV_HEADER + "\n" + "\n".join(rows) + "\n"


def make_records(households, demands_by_day):
    """Records for (household_id, lon, lat) triples.

    demands_by_day maps day offset -> callable(household index) -> (total,
    peak, valley) or a constant triple for every household.
    """
    records = []
    for offset, spec in demands_by_day.items():
        day = DAY0 + dt.timedelta(days=offset)
        for idx, (hid, lon, lat) in enumerate(households):
            triple = spec(idx) if callable(spec) else spec
            total, peak, valley = triple
            records.append(ConsumptionRecord(hid, day, total, peak, valley, lon, lat))
    return records


def small_town(n=9, days=4, demand=(10.0, 7.0, 3.0)):
    """n households on a lon/lat grid with a constant demand profile."""
    side = math.ceil(math.sqrt(n))
    households = [
        (f"H{k:03d}", BASE_LON + (k % side) * 0.002, BASE_LAT + (k // side) * 0.002)
        for k in range(n)
    ]
    records = make_records(households, {d: demand for d in range(days)})
    return build_dataset(records)


@pytest.fixture
def town():
    return small_town()


def planted_shift_dataset(n_per_cluster=5000, sep_m=4000.0, std_m=150.0, seed=42):
    """Two Gaussian household clusters; all demand sits in cluster 1 on day
    one and in cluster 2 on day two. Demands are dyadic so conservation
    checks can be exact.

    Returns (dataset, r1_lonlat, r2_lonlat).
    """
    rng = np.random.default_rng(seed)
    # planar offsets in meters converted to degrees around the anchor
    m_per_deg_lat = 111194.92664455873
    m_per_deg_lon = m_per_deg_lat * math.cos(math.radians(BASE_LAT))
    centers = [(0.0, 0.0), (sep_m, 0.0)]
    households = []
    for c, (cx, cy) in enumerate(centers):
        offsets = rng.normal(0.0, std_m, size=(n_per_cluster, 2))
        for k in range(n_per_cluster):
            x = cx + offsets[k, 0]
            y = cy + offsets[k, 1]
            households.append(
                (
                    f"C{c}{k:05d}",
                    BASE_LON + x / m_per_deg_lon,
                    BASE_LAT + y / m_per_deg_lat,
                    c,
                )
            )
    records = []
    day1 = DAY0
    day2 = DAY0 + dt.timedelta(days=1)
    for hid, lon, lat, cluster in households:
        total = dyadic(int(rng.integers(512, 2048)))
        peak = dyadic(int(round(total * 1024 * 0.7)))
        valley = total - peak
        on1 = (total, peak, valley) if cluster == 0 else (0.0, 0.0, 0.0)
        on2 = (0.0, 0.0, 0.0) if cluster == 0 else (total, peak, valley)
        records.append(ConsumptionRecord(hid, day1, *on1, lon, lat))
        records.append(ConsumptionRecord(hid, day2, *on2, lon, lat))
    dataset = build_dataset(records)
    r1 = (BASE_LON, BASE_LAT)
    r2 = (BASE_LON + sep_m / m_per_deg_lon, BASE_LAT)
    return dataset, r1, r2
