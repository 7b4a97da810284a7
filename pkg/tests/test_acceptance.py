"""Release gate for the analysis engine.

Each test covers one shipping criterion and prints a single
"ACCEPTANCE <name>: PASS|FAIL" line (visible with -s or in failure output).
Tolerances and budgets here are fixed; loosening them is a release decision,
not a test fix.
"""

import datetime as dt
import io
import math
import time
from contextlib import contextmanager

import numpy as np

from demandflow import (
    Bandwidth,
    GridSpec,
    PEAK_VALLEY,
    REGULAR_SPLIT,
    ShiftTask,
    TimePeriod,
    build_dataset,
    default_bandwidth,
    estimate_demand_field,
    gaussian_kernel,
    gradient,
    hexbin_demand,
    make_grid,
    normalize_weights,
    parse_consumption_csv,
    potential_field,
    project_coordinates,
    run_task,
    velocity_field,
    weighted_mixture_field,
    window_summary,
)
from demandflow import serialize
from demandflow.cli import main as cli_main

from conftest import DAY0, kde_oracle, planted_shift_dataset
import service_utils as su


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE {name}: PASS", flush=True)


def random_spd(rng, scale):
    a = rng.uniform(-1, 1, (2, 2))
    return a @ a.T * scale**2 + np.eye(2) * (scale / 2) ** 2


def test_kde_matches_direct_summation_oracle():
    with criterion("kde-oracle-equivalence"):
        rng = np.random.default_rng(2024)
        started = time.perf_counter()
        for _ in range(20):
            n = int(rng.integers(2, 51))
            nx = int(rng.integers(8, 33))
            ny = int(rng.integers(8, 33))
            spread = float(rng.uniform(500, 3000))
            px = rng.uniform(-spread, spread, n)
            py = rng.uniform(-spread, spread, n)
            weights = normalize_weights(rng.uniform(0.1, 5.0, n))
            H = random_spd(rng, float(rng.uniform(200, 900)))
            grid = make_grid(
                (px.min(), py.min(), px.max(), py.max()),
                nx,
                ny,
                float(rng.uniform(100, 1000)),
            )
            produced = weighted_mixture_field(px, py, weights, grid, Bandwidth(H))
            reference = np.array(kde_oracle(px, py, weights, grid, H))
            gap = np.abs(produced - reference).max()
            assert gap <= 1e-12 * np.abs(reference).max()
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"20 oracle comparisons took {elapsed:.2f}s"


def test_kernel_normalization_and_symmetry():
    with criterion("kernel-correctness"):
        identity = Bandwidth(np.eye(2))
        at_origin = gaussian_kernel([0.0, 0.0], identity)
        assert abs(at_origin - 1.0 / (2.0 * math.pi)) <= 1e-14

        rng = np.random.default_rng(7)
        H = Bandwidth(random_spd(rng, 1.5))
        offsets = rng.uniform(-4, 4, (100, 2))
        forward = gaussian_kernel(offsets, H)
        backward = gaussian_kernel(-offsets, H)
        assert np.array_equal(forward, backward)


def test_default_margin_fields_conserve_mass():
    with criterion("mass-within-two-percent"):
        rng = np.random.default_rng(11)
        started = time.perf_counter()
        for _ in range(10):
            n = 1000
            spread = float(rng.uniform(500, 2500))
            px = rng.normal(0.0, spread, n)
            py = rng.normal(0.0, spread, n)
            weights = normalize_weights(rng.uniform(0.2, 3.0, n))
            bw = default_bandwidth(np.column_stack([px, py]))
            grid = make_grid(
                (px.min(), py.min(), px.max(), py.max()),
                128,
                128,
                bw.max_sigma,
            )
            values = weighted_mixture_field(px, py, weights, grid, bw)
            mass = values.sum() * grid.cell_area
            assert 0.98 <= mass <= 1.02, f"field mass {mass:.4f} outside 1 +/- 0.02"
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"10 mass checks took {elapsed:.2f}s"


def test_velocity_converges_at_second_order():
    with criterion("gradient-convergence"):
        sigma = 1.0
        errors = []
        for nx in (32, 64, 128):
            dx = 10.0 / nx
            grid = GridSpec(nx, nx, -5.0, -5.0, dx, dx)
            X, Y = grid.cell_centers()
            values = np.exp(-(X**2 + Y**2) / (2.0 * sigma**2))
            u, v = gradient(values, grid)
            gx = -(X / sigma**2) * values
            gy = -(Y / sigma**2) * values
            errors.append(max(np.abs(u - gx).max(), np.abs(v - gy).max()))
        for coarse, fine in zip(errors, errors[1:]):
            ratio = coarse / fine
            assert ratio >= 3.5, f"error only dropped {ratio:.2f}x when dx halved"


def test_zero_shift_and_antisymmetry_are_exact():
    with criterion("zero-shift-antisymmetry"):
        ds, _, _ = planted_shift_dataset(n_per_cluster=50, seed=5)
        grid = make_grid(ds.bounding_box, 32, 32, 500.0)
        bw = Bandwidth.isotropic(500.0)
        day0 = TimePeriod(DAY0, DAY0)
        day1 = TimePeriod(DAY0 + dt.timedelta(days=1), DAY0 + dt.timedelta(days=1))
        a = estimate_demand_field(ds, day0, grid, bw)
        a_again = estimate_demand_field(ds, day0, grid, bw)
        b = estimate_demand_field(ds, day1, grid, bw)

        still = potential_field(a, a_again)
        assert not still.norm.any() and not still.kwh.any()
        nu = velocity_field(still)
        assert not nu.u.any() and not nu.v.any()

        forward = potential_field(a, b)
        backward = potential_field(b, a)
        assert not (forward.kwh + backward.kwh).any()
        assert not (forward.norm + backward.norm).any()


def test_planted_relocation_recovered_at_scale():
    with criterion("planted-shift-recovery"):
        ds, r1_lonlat, r2_lonlat = planted_shift_dataset()
        assert len(ds.household_ids) == 10000
        task = ShiftTask(
            kind=REGULAR_SPLIT,
            base_period=TimePeriod(*ds.date_range),
            split_count=2,
            grid_cells=128,
        )
        started = time.perf_counter()
        result = run_task(task, ds)
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"10k-household task took {elapsed:.2f}s"

        [pair] = result.pairs
        origin = ds.origin_lonlat
        x1, y1 = project_coordinates(r1_lonlat[0], r1_lonlat[1], *origin)
        x2, y2 = project_coordinates(r2_lonlat[0], r2_lonlat[1], *origin)

        def window_of(x, y):
            return next(
                w for w in pair.windows
                if w.extent[0] <= x < w.extent[2] and w.extent[1] <= y < w.extent[3]
            )

        gain = max(pair.windows, key=lambda w: w.signed_change)
        loss = min(pair.windows, key=lambda w: w.signed_change)
        assert gain.window_index == window_of(x2, y2).window_index
        assert loss.window_index == window_of(x1, y1).window_index
        assert gain.signed_change > 0 > loss.signed_change

        seg = math.hypot(x2 - x1, y2 - y1)
        ux, uy = (x2 - x1) / seg, (y2 - y1) / seg
        between = [
            a for a in pair.arrows
            if abs((a.x - x1) * uy - (a.y - y1) * ux) < 300.0
            and 0.15 * seg < (a.x - x1) * ux + (a.y - y1) * uy < 0.85 * seg
        ]
        assert between, "no arrows sampled on the relocation segment"
        for arrow in between:
            assert arrow.dir_x * ux + arrow.dir_y * uy > 0


def test_window_and_hexbin_conservation():
    with criterion("conservation"):
        ds, _, _ = planted_shift_dataset(n_per_cluster=500, seed=9)
        task = ShiftTask(
            kind=REGULAR_SPLIT,
            base_period=TimePeriod(*ds.date_range),
            split_count=2,
            grid_cells=64,
        )
        result = run_task(task, ds)
        [pair] = result.pairs
        grid = pair.phi.grid
        total = pair.phi.kwh.sum() * grid.cell_area
        for wx, wy in [(8, 8), (4, 2), (1, 1)]:
            windows = window_summary(pair.phi, wx, wy)
            windowed = sum(w.signed_change for w in windows)
            assert abs(windowed - total) <= 1e-9 * max(abs(total), 1e-30)

        # hexagon sums carry every recorded kWh without rounding: the
        # synthetic demands are dyadic rationals, so sums are exact floats
        period = TimePeriod(*ds.date_range)
        cells = hexbin_demand(ds, period, 400.0)
        binned = sum(cell.demand for cell in cells)
        expected, _, _, _ = ds.period_sums(period.start, period.end)
        assert binned == expected


def test_service_contract_and_cli_parity(tmp_path):
    with criterion("service-contract"):
        with su.make_client(tmp_path / "main") as client:
            did = su.assert_upload_contract(client)
            su.assert_views_contract(client, did)
            su.assert_task_rejections_contract(client, did)
            result_bytes = su.assert_lifecycle_contract(client, did)

        with su.gated_tasks() as (started, release):
            with su.make_client(tmp_path / "gated", queue_size=1) as client:
                gated_did = su.upload(client, su.GOOD_CSV).json()["dataset_id"]
                su.assert_gated_contract(client, gated_did, started, release)

        with su.make_client(tmp_path / "failing") as client:
            su.assert_failure_contract(client)

        csv_path = tmp_path / "households.csv"
        csv_path.write_bytes(su.GOOD_CSV)
        out_path = tmp_path / "shift.json"
        code = cli_main(
            [
                "shift",
                str(csv_path),
                "--kind",
                "regular_split",
                "--start",
                "2019-07-01",
                "--end",
                "2019-07-04",
                "--split",
                "2",
                "--grid",
                "8",
                "--windows",
                "2",
                "-o",
                str(out_path),
            ]
        )
        assert code == 0
        assert out_path.read_bytes() == result_bytes


def _year_of_meter_readings(households, days):
    rng = np.random.default_rng(33)
    lon = 121.40 + rng.uniform(0, 0.10, households)
    lat = 31.15 + rng.uniform(0, 0.08, households)
    first = dt.date(2019, 1, 1)
    dates = [(first + dt.timedelta(days=d)).isoformat() for d in range(days)]
    totals = rng.integers(2, 40, (days, households))
    peak_share = rng.uniform(0.5, 0.8, (days, households))

    out = io.StringIO()
    out.write("household_id,date,pap_r,pap_r1,pap_r2,lon,lat\n")
    for d in range(days):
        date = dates[d]
        for h in range(households):
            total = float(totals[d, h])
            peak = round(total * peak_share[d, h], 3)
            valley = round(total - peak, 3)
            out.write(
                f"M{h:04d},{date},{total},{peak},{valley},{lon[h]:.6f},{lat[h]:.6f}\n"
            )
    return out.getvalue().encode()


def test_yearly_ingest_and_task_throughput():
    with criterion("end-to-end-throughput"):
        raw = _year_of_meter_readings(households=1000, days=365)
        started = time.perf_counter()
        records, report = parse_consumption_csv(raw)
        ds = build_dataset(records)
        task = ShiftTask(
            kind=PEAK_VALLEY,
            base_period=TimePeriod(*ds.date_range),
            grid_cells=128,
        )
        result = run_task(task, ds)
        body = serialize.dumps(serialize.result_json(result, ds.origin_lonlat))
        elapsed = time.perf_counter() - started
        assert report.accepted_count == 365000
        assert ds.record_count == 365000
        assert len(result.pairs) == 1
        assert body.startswith(b'{"windows_x":')
        assert elapsed < 30.0, f"ingest + peak_valley task took {elapsed:.2f}s"
