"""
Demand-shift potential and flow arrows
======================================

Builds a month where consumption migrates from an old quarter to a new
development halfway through, runs a two-way split task, and reads the shift
off the window summaries and the arrow field. The arrows are also written
out as GeoJSON for any map viewer.
"""

import datetime as dt
import io
import json
from pathlib import Path

import numpy as np

from demandflow import (
    REGULAR_SPLIT,
    ShiftTask,
    TimePeriod,
    build_dataset,
    parse_consumption_csv,
    project_coordinates,
    run_task,
)
from demandflow.serialize import arrows_geojson

rng = np.random.default_rng(3)

# --- a relocation story: the same town, before and after --------------------

old_quarter = (121.465, 31.205)
new_quarter = (121.500, 31.230)
first_day = dt.date(2019, 9, 1)
n_homes = 800

out = io.StringIO()
out.write("household_id,date,pap_r,pap_r1,pap_r2,lon,lat\n")
for h in range(n_homes):
    # every home exists all month at a fixed address; what moves is demand
    near_old = h < n_homes // 2
    c_lon, c_lat = old_quarter if near_old else new_quarter
    lon = c_lon + rng.normal(0, 0.005)
    lat = c_lat + rng.normal(0, 0.004)
    for d in range(30):
        day = first_day + dt.timedelta(days=d)
        # demand ramps down in the old quarter and up in the new one
        phase = d / 29.0
        level = (1.0 - phase) if near_old else phase
        total = round((2.0 + 10.0 * level) * 4) / 4
        peak = round(total * 0.65 * 4) / 4
        out.write(
            f"H{h:04d},{day.isoformat()},{total},{peak},{total - peak},"
            f"{lon:.6f},{lat:.6f}\n"
        )

records, _ = parse_consumption_csv(out.getvalue())
dataset = build_dataset(records)

# --- one task: first half of the month against the second -------------------

task = ShiftTask(
    kind=REGULAR_SPLIT,
    base_period=TimePeriod(*dataset.date_range),
    split_count=2,
    grid_cells=96,
)
result = run_task(task, dataset)
[pair] = result.pairs
print(f"pair: {pair.label}")

# --- windows: where demand went up, where it went down ----------------------

by_change = sorted(pair.windows, key=lambda w: w.signed_change)
print("\nstrongest window changes (kWh):")
for w in by_change[:2] + by_change[-2:]:
    print(f"  window {w.window_index}: signed {w.signed_change:+9.1f}   "
          f"abs {w.abs_change:9.1f}")

origin = dataset.origin_lonlat
ox, oy = project_coordinates(*old_quarter, *origin)
nx_, ny_ = project_coordinates(*new_quarter, *origin)
loss, gain = by_change[0], by_change[-1]
in_loss = loss.extent[0] <= ox < loss.extent[2] and loss.extent[1] <= oy < loss.extent[3]
in_gain = gain.extent[0] <= nx_ < gain.extent[2] and gain.extent[1] <= ny_ < gain.extent[3]
print(f"\nbiggest loss sits on the old quarter: {in_loss}")
print(f"biggest gain sits on the new quarter: {in_gain}")

# --- arrows: the flow field, thinned and thresholded -------------------------

print(f"\n{len(pair.arrows)} arrows after thinning")
seg = float(np.hypot(nx_ - ox, ny_ - oy))
ux, uy = (nx_ - ox) / seg, (ny_ - oy) / seg
aligned = [
    a for a in pair.arrows
    if abs((a.x - ox) * uy - (a.y - oy) * ux) < 500.0
    and 0.1 * seg < (a.x - ox) * ux + (a.y - oy) * uy < 0.9 * seg
]
mean_dot = float(np.mean([a.dir_x * ux + a.dir_y * uy for a in aligned]))
print(f"{len(aligned)} arrows lie along the corridor; mean alignment {mean_dot:+.2f}")

# --- export for a map viewer -------------------------------------------------

geojson = arrows_geojson(pair.arrows, pair.phi.grid, result.arrow_stride, origin)
out_path = Path("shift_arrows.geojson")
out_path.write_text(json.dumps(geojson))
print(f"\nwrote {len(geojson['features'])} line features to {out_path}")
