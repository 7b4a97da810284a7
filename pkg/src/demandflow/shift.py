"""Demand-shift as a potential flow.

The potential phi is the discrepancy between the KDE demand fields of two
periods (later minus earlier; valley minus peak for the peak/valley kind)
and the velocity nu is its gradient. A gradient field on a simply connected
grid is irrotational by construction, so no separate projection step is
applied. Tasks describe which field pairs to compare; running a task
produces, per pair, the potential, the velocity, rectangular window
statistics in kWh, and subsampled flow arrows.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, replace

import numpy as np

from .errors import GridError, SplitError, TaskError
from .ingest import Dataset
from .spatial import (
    Bandwidth,
    GridSpec,
    ScalarField,
    default_bandwidth,
    estimate_demand_field,
    make_grid,
)
from .temporal import FULL_DAY, PEAK_WINDOW, VALLEY_WINDOW, TimePeriod

PEAK_VALLEY = "peak_valley"
REGULAR_SPLIT = "regular_split"
MULTI_PERIOD = "multi_period"
TASK_KINDS = (PEAK_VALLEY, REGULAR_SPLIT, MULTI_PERIOD)

PENDING = "pending"
RUNNING = "running"
DONE = "done"
FAILED = "failed"
TASK_STATES = (PENDING, RUNNING, DONE, FAILED)

DEFAULT_GRID_CELLS = 128
DEFAULT_WINDOWS = (8, 8)
DEFAULT_ARROW_STRIDE = 4
DEFAULT_ARROW_MIN_MAGNITUDE = 0.05

_BAND_SHORT = {FULL_DAY: "full", PEAK_WINDOW: "peak", VALLEY_WINDOW: "valley"}


@dataclass
class ShiftTask:
    """A demand-shift analysis definition plus its lifecycle state.

    kind selects how field pairs are derived from the period selection:
    peak_valley compares the peak and valley bands of base_period,
    regular_split cuts base_period into split_count contiguous sub-periods
    and compares consecutive ones, multi_period compares the given periods
    consecutively. grid=None derives a grid_cells x grid_cells grid from the
    dataset; bandwidth is a Bandwidth, a smoothing length in meters, or
    "auto" for the Silverman rule.
    """

    kind: str
    base_period: TimePeriod | None = None
    split_count: int | None = None
    periods: tuple[TimePeriod, ...] = ()
    grid: GridSpec | None = None
    grid_cells: int = DEFAULT_GRID_CELLS
    bandwidth: Bandwidth | float | str = "auto"
    state: str = PENDING


def validate_task(task: ShiftTask, dataset: Dataset | None = None) -> None:
    """Check task invariants; with a dataset, also check periods fall in range.

    Raises TaskError (bad kind or parameters), SplitError (split finer than
    the day count), or GridError (grid too small for the gradient stencil).
    """
    if task.kind not in TASK_KINDS:
        raise TaskError(f"unknown task kind {task.kind!r}")
    if task.kind == MULTI_PERIOD:
        periods = tuple(task.periods)
        if len(periods) < 2:
            raise TaskError("multi_period needs at least two periods")
        for prev, cur in zip(periods, periods[1:]):
            if cur.start <= prev.end:
                raise TaskError(
                    "periods must be ordered and non-overlapping: "
                    f"{prev.end.isoformat()} does not precede {cur.start.isoformat()}"
                )
    else:
        if task.base_period is None:
            raise TaskError(f"{task.kind} requires a base period")
        periods = (task.base_period,)
        if task.kind == REGULAR_SPLIT:
            if task.split_count is None or task.split_count < 2:
                raise TaskError("regular_split needs split_count >= 2")
            if task.split_count > task.base_period.n_days:
                raise SplitError(
                    f"cannot split {task.base_period.n_days} day(s) "
                    f"into {task.split_count} sub-periods"
                )
    if task.grid is not None:
        if task.grid.nx < 3 or task.grid.ny < 3:
            raise GridError("shift analysis needs at least a 3x3 grid for the gradient")
    elif task.grid_cells < 3:
        raise GridError("shift analysis needs at least a 3x3 grid for the gradient")
    bw = task.bandwidth
    if not isinstance(bw, Bandwidth):
        if isinstance(bw, str):
            if bw != "auto":
                raise TaskError(f"bandwidth must be a number, a matrix, or \"auto\", got {bw!r}")
        elif not isinstance(bw, (int, float)) or not bw > 0:
            raise TaskError(f"bandwidth must be positive, got {bw!r}")
    if dataset is not None:
        first, last = dataset.date_range
        for p in periods:
            if p.start < first or p.end > last:
                raise TaskError(
                    f"period {p.start.isoformat()}..{p.end.isoformat()} outside "
                    f"dataset range {first.isoformat()}..{last.isoformat()}"
                )


def expand_task(task: ShiftTask, dataset: Dataset | None = None) -> list[tuple[TimePeriod, TimePeriod]]:
    """Resolve a task into the ordered (earlier, later) period pairs to compare."""
    validate_task(task, dataset)
    if task.kind == PEAK_VALLEY:
        base = task.base_period
        return [(replace(base, band=PEAK_WINDOW), replace(base, band=VALLEY_WINDOW))]
    if task.kind == REGULAR_SPLIT:
        subs = _split_period(task.base_period, task.split_count)
        return list(zip(subs, subs[1:]))
    return list(zip(task.periods, task.periods[1:]))


def _split_period(period: TimePeriod, k: int) -> list[TimePeriod]:
    """k contiguous sub-periods of near-equal day counts, remainder to the front."""
    n = period.n_days
    base, rem = divmod(n, k)
    subs = []
    cursor = period.start
    for i in range(k):
        days = base + (1 if i < rem else 0)
        end = cursor + dt.timedelta(days=days - 1)
        subs.append(TimePeriod(cursor, end, period.band))
        cursor = end + dt.timedelta(days=1)
    return subs


def pair_label(a: TimePeriod, b: TimePeriod) -> str:
    return (
        f"{a.start.isoformat()}..{a.end.isoformat()}:{_BAND_SHORT[a.band]}"
        f" vs {b.start.isoformat()}..{b.end.isoformat()}:{_BAND_SHORT[b.band]}"
    )


@dataclass(frozen=True)
class PotentialField:
    """Discrepancy between two demand fields on a shared grid.

    norm compares the normalized distributions (integrates to ~0); kwh is
    the kWh-denominated view s_B * B - s_A * A used for windows, arrows, and
    the legend.
    """

    grid: GridSpec
    norm: np.ndarray
    kwh: np.ndarray

    def __post_init__(self):
        for name in ("norm", "kwh"):
            v = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if v.shape != (self.grid.nx, self.grid.ny):
                raise GridError(f"{name} shape {v.shape} does not match grid")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} values must be finite")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    def integral_kwh(self) -> float:
        return float(self.kwh.sum() * self.grid.cell_area)


def potential_field(field_a: ScalarField, field_b: ScalarField) -> PotentialField:
    """phi = field_b - field_a, carried in both normalized and kWh views.

    The kWh view is formed as fl(s_B*B) - fl(s_A*A) with a fixed operand
    order, so swapping the arguments negates every cell bit-for-bit.
    """
    if field_a.grid != field_b.grid:
        raise GridError("potential requires both fields on the identical grid")
    scaled_b = field_b.scale_kwh * field_b.values
    scaled_a = field_a.scale_kwh * field_a.values
    return PotentialField(
        field_a.grid,
        norm=field_b.values - field_a.values,
        kwh=scaled_b - scaled_a,
    )


@dataclass(frozen=True)
class VectorField:
    """Per-cell planar vector (u toward +x, v toward +y) on a grid."""

    grid: GridSpec
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name in ("u", "v"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if arr.shape != (self.grid.nx, self.grid.ny):
                raise GridError(f"{name} shape {arr.shape} does not match grid")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} values must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


def gradient(values: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis finite differences of a cell-centered field.

    Second-order central differences on interior cells, first-order
    one-sided at the two boundary slices of each axis. Needs at least three
    cells per axis.
    """
    if grid.nx < 3 or grid.ny < 3:
        raise GridError(f"gradient needs at least 3 cells per axis, got {grid.nx}x{grid.ny}")
    values = np.asarray(values, dtype=float)
    u = np.empty_like(values)
    v = np.empty_like(values)
    u[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2.0 * grid.dx)
    u[0, :] = (values[1, :] - values[0, :]) / grid.dx
    u[-1, :] = (values[-1, :] - values[-2, :]) / grid.dx
    v[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * grid.dy)
    v[:, 0] = (values[:, 1] - values[:, 0]) / grid.dy
    v[:, -1] = (values[:, -1] - values[:, -2]) / grid.dy
    return u, v


def velocity_field(phi) -> VectorField:
    """nu = grad(phi). PotentialFields differentiate their kWh view, so the
    components read as kWh per meter; a plain ScalarField uses its values."""
    if isinstance(phi, PotentialField):
        grid, vals = phi.grid, phi.kwh
    else:
        grid, vals = phi.grid, phi.values
    u, v = gradient(vals, grid)
    return VectorField(grid, u, v)


@dataclass(frozen=True)
class WindowStat:
    """One rectangular window of the field: integrated signed and absolute change."""

    window_index: tuple[int, int]
    extent: tuple[float, float, float, float]
    signed_change: float
    abs_change: float


def _partition(cells: int, parts: int) -> list[tuple[int, int]]:
    """Near-equal contiguous index ranges, remainder cells to the front."""
    base, rem = divmod(cells, parts)
    edges = []
    lo = 0
    for p in range(parts):
        hi = lo + base + (1 if p < rem else 0)
        edges.append((lo, hi))
        lo = hi
    return edges


def window_summary(phi, windows_x: int, windows_y: int) -> list[WindowStat]:
    """Tile the grid into windows_x x windows_y rectangles and integrate.

    signed_change sums phi*dx*dy over the window's cells (kWh for a
    PotentialField); abs_change integrates |phi| and therefore dominates
    |signed_change|. Windows tile the domain exactly, so their signed
    changes recompose the full field integral.
    """
    if isinstance(phi, PotentialField):
        grid, vals = phi.grid, phi.kwh
    else:
        grid, vals = phi.grid, phi.values
    if not (1 <= windows_x <= grid.nx and 1 <= windows_y <= grid.ny):
        raise GridError(
            f"window grid {windows_x}x{windows_y} must be between 1x1 "
            f"and {grid.nx}x{grid.ny}"
        )
    area = grid.cell_area
    stats = []
    for i, (ci0, ci1) in enumerate(_partition(grid.nx, windows_x)):
        for j, (cj0, cj1) in enumerate(_partition(grid.ny, windows_y)):
            block = vals[ci0:ci1, cj0:cj1]
            extent = (
                grid.x0 + ci0 * grid.dx,
                grid.y0 + cj0 * grid.dy,
                grid.x0 + ci1 * grid.dx,
                grid.y0 + cj1 * grid.dy,
            )
            stats.append(
                WindowStat(
                    window_index=(i, j),
                    extent=extent,
                    signed_change=float(block.sum() * area),
                    abs_change=float(np.abs(block).sum() * area),
                )
            )
    return stats


@dataclass(frozen=True)
class Arrow:
    """A flow-map arrow: planar origin at a cell center, unit direction,
    and the velocity magnitude there."""

    x: float
    y: float
    dir_x: float
    dir_y: float
    magnitude: float


def flow_arrows(
    nu: VectorField,
    stride: int = DEFAULT_ARROW_STRIDE,
    min_magnitude: float = DEFAULT_ARROW_MIN_MAGNITUDE,
) -> list[Arrow]:
    """Subsample the velocity field into arrows for the flow map.

    Every stride-th cell in both axes is sampled; arrows weaker than
    min_magnitude times the strongest cell anywhere in the field are
    suppressed, as are exact zeros (no direction). Cell order is row-major
    over the sampled indices, so output order is deterministic.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if not 0.0 <= min_magnitude < 1.0:
        raise ValueError(f"min_magnitude must be in [0, 1), got {min_magnitude}")
    mag = nu.magnitude()
    peak = float(mag.max())
    if peak == 0.0:
        return []
    threshold = min_magnitude * peak
    xc = nu.grid.x_centers()
    yc = nu.grid.y_centers()
    arrows = []
    for i in range(0, nu.grid.nx, stride):
        for j in range(0, nu.grid.ny, stride):
            m = float(mag[i, j])
            if m <= 0.0 or m < threshold:
                continue
            arrows.append(
                Arrow(
                    x=float(xc[i]),
                    y=float(yc[j]),
                    dir_x=float(nu.u[i, j] / m),
                    dir_y=float(nu.v[i, j] / m),
                    magnitude=m,
                )
            )
    return arrows


@dataclass(frozen=True)
class ShiftPair:
    """Everything computed for one (earlier, later) period comparison."""

    label: str
    period_a: TimePeriod
    period_b: TimePeriod
    phi: PotentialField
    nu: VectorField
    windows: tuple[WindowStat, ...]
    arrows: tuple[Arrow, ...]


@dataclass(frozen=True)
class ShiftResult:
    """Immutable output of a completed task.

    arrow_stride is kept so renderers can size arrows against the sampling
    spacing they were thinned to.
    """

    pairs: tuple[ShiftPair, ...]
    windows_x: int
    windows_y: int
    arrow_stride: int
    created_at: dt.datetime


def resolve_grid_and_bandwidth(task: ShiftTask, dataset: Dataset) -> tuple[GridSpec, Bandwidth]:
    """Fill in the task's grid and bandwidth from the dataset where "auto".

    The Silverman length is computed from all household positions before the
    grid exists (the grid margin needs it), then floored at the realized
    cell size to keep kernels resolvable.
    """
    bw = task.bandwidth
    if isinstance(bw, Bandwidth):
        grid = task.grid or make_grid(
            dataset.bounding_box, task.grid_cells, task.grid_cells, bw.max_sigma
        )
        return grid, bw
    if isinstance(bw, (int, float)) and not isinstance(bw, bool):
        h = float(bw)
        grid = task.grid or make_grid(dataset.bounding_box, task.grid_cells, task.grid_cells, h)
        return grid, Bandwidth.isotropic(h)
    x, y = dataset.household_xy
    points = np.stack([x, y], axis=1)
    raw = default_bandwidth(points)
    grid = task.grid or make_grid(
        dataset.bounding_box, task.grid_cells, task.grid_cells, raw.max_sigma
    )
    return grid, default_bandwidth(points, floor=max(grid.dx, grid.dy))


def run_task(
    task: ShiftTask,
    dataset: Dataset,
    *,
    windows: tuple[int, int] = DEFAULT_WINDOWS,
    arrow_stride: int = DEFAULT_ARROW_STRIDE,
    arrow_min_magnitude: float = DEFAULT_ARROW_MIN_MAGNITUDE,
    rate_per_day: bool = False,
) -> ShiftResult:
    """Execute a pending task against a dataset.

    State moves pending -> running -> done; any error marks the task failed
    and re-raises, discarding partial pairs. rate_per_day divides each
    pair's kWh view by the day gap between period starts (minimum 1), for
    reading the result as a per-day rate; off by default.
    """
    if task.state != PENDING:
        raise TaskError(f"task is {task.state}, expected {PENDING}")
    task.state = RUNNING
    try:
        period_pairs = expand_task(task, dataset)
        grid, bandwidth = resolve_grid_and_bandwidth(task, dataset)
        wx, wy = windows
        pairs = []
        for a, b in period_pairs:
            field_a = estimate_demand_field(dataset, a, grid, bandwidth)
            field_b = estimate_demand_field(dataset, b, grid, bandwidth)
            phi = potential_field(field_a, field_b)
            if rate_per_day:
                gap = max(1, (b.start - a.start).days)
                phi = PotentialField(grid, norm=phi.norm, kwh=phi.kwh / gap)
            nu = velocity_field(phi)
            pairs.append(
                ShiftPair(
                    label=pair_label(a, b),
                    period_a=a,
                    period_b=b,
                    phi=phi,
                    nu=nu,
                    windows=tuple(window_summary(phi, wx, wy)),
                    arrows=tuple(flow_arrows(nu, arrow_stride, arrow_min_magnitude)),
                )
            )
        result = ShiftResult(
            pairs=tuple(pairs),
            windows_x=wx,
            windows_y=wy,
            arrow_stride=arrow_stride,
            created_at=dt.datetime.now(dt.timezone.utc),
        )
    except BaseException:
        task.state = FAILED
        raise
    task.state = DONE
    return result
