"""Continuous spatial demand fields via weighted Gaussian kernel density
estimation on a regular planar grid, plus hexagonal spatial summaries.

The estimator places a normalized bivariate Gaussian at every household and
weights it by the household's share of the snapshot demand, so the resulting
field integrates to ~1 over a sufficiently large grid and fields of
different periods are directly comparable. The absolute-kWh view is carried
alongside as `scale_kwh` (the snapshot total).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BandwidthError,
    CoverageError,
    DegenerateWeightsError,
    GridError,
    PeriodError,
)
from .ingest import Dataset
from .temporal import TimePeriod

# Households per evaluation block. Fixed so that per-cell summation order is
# stable and results are bit-identical across runs.
_KDE_CHUNK = 256

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class GridSpec:
    """Regular planar grid. (x0, y0) is the lower-left corner of cell (0, 0);
    fields are evaluated at cell centers (x0 + (i + 1/2) dx, y0 + (j + 1/2) dy)."""

    nx: int
    ny: int
    x0: float
    y0: float
    dx: float
    dy: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise GridError(f"grid must be at least 2x2, got {self.nx}x{self.ny}")
        if self.dx <= 0 or self.dy <= 0:
            raise GridError("grid cell size must be positive")

    @property
    def x_max(self) -> float:
        return self.x0 + self.nx * self.dx

    @property
    def y_max(self) -> float:
        return self.y0 + self.ny * self.dy

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def x_centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (nx, ny); axis 0 walks x, axis 1 walks y."""
        x = self.x_centers()
        y = self.y_centers()
        return np.broadcast_to(x[:, None], (self.nx, self.ny)).copy(), np.broadcast_to(
            y[None, :], (self.nx, self.ny)
        ).copy()

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= self.x0) & (x <= self.x_max) & (y >= self.y0) & (y <= self.y_max)


@dataclass(frozen=True)
class Bandwidth:
    """Symmetric positive definite 2x2 smoothing matrix, meters squared."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise BandwidthError(f"bandwidth matrix must be 2x2, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise BandwidthError("bandwidth matrix must be finite")
        if abs(m[0, 1] - m[1, 0]) > 1e-9 * max(1.0, abs(m[0, 1]), abs(m[1, 0])):
            raise BandwidthError("bandwidth matrix must be symmetric")
        eigenvalues = np.linalg.eigvalsh(m)
        if eigenvalues.min() <= 0:
            raise BandwidthError(
                f"bandwidth matrix must be positive definite (eigenvalues {eigenvalues})"
            )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def isotropic(cls, h: float) -> "Bandwidth":
        """diag(h^2, h^2) for a scalar smoothing length h in meters."""
        if h <= 0 or not math.isfinite(h):
            raise BandwidthError(f"smoothing length must be positive, got {h}")
        return cls(np.diag([h * h, h * h]))

    @property
    def max_sigma(self) -> float:
        """Largest one-axis standard deviation, sqrt of the top eigenvalue."""
        return float(np.sqrt(np.linalg.eigvalsh(self.matrix).max()))


@dataclass(frozen=True)
class ScalarField:
    """Field values at the grid cell centers, (nx, ny), finite.

    `scale_kwh` is the multiplier taking the stored values to a
    kWh-denominated density: for KDE outputs the values integrate to ~1 and
    scale_kwh is the snapshot's total demand.
    """

    grid: GridSpec
    values: np.ndarray
    scale_kwh: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.nx, self.grid.ny):
            raise GridError(
                f"values shape {v.shape} does not match grid "
                f"{(self.grid.nx, self.grid.ny)}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        """Midpoint quadrature of the stored values over the grid."""
        return float(self.values.sum() * self.grid.cell_area)


@dataclass(frozen=True)
class WeightedPoint:
    """A household location with its normalized demand weight."""

    x: float
    y: float
    c: float = 1.0


@dataclass(frozen=True)
class HexCell:
    """One occupied hexagon: planar center, summed demand, distinct households."""

    center_x: float
    center_y: float
    demand: float
    household_count: int


def normalize_weights(demands) -> np.ndarray:
    """c_i = demand_i / sum(demands); the weights sum to one.

    Raises DegenerateWeightsError when every demand is zero.
    """
    demands = np.asarray(demands, dtype=float)
    if demands.size == 0:
        raise DegenerateWeightsError("no demands to normalize")
    if np.any(demands < 0):
        raise ValueError("demands must be nonnegative")
    total = demands.sum()
    if total <= 0:
        raise DegenerateWeightsError("all demands are zero; no field can be formed")
    return demands / total


def _kernel_coefficients(bandwidth: Bandwidth):
    """(a, b, c, norm) with u'H^-1 u = a ux^2 + 2b ux uy + c uy^2 and the
    bivariate Gaussian normalization constant."""
    m = bandwidth.matrix
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    a = m[1, 1] / det
    b = -m[0, 1] / det
    c = m[0, 0] / det
    norm = 1.0 / (2.0 * math.pi * math.sqrt(det))
    return a, b, c, norm


def gaussian_kernel(u, bandwidth: Bandwidth):
    """Normalized bivariate Gaussian K_H(u) = (2 pi)^-1 |H|^-1/2 exp(-u'H^-1 u / 2).

    `u` is a planar offset (..., 2) in meters; scalars in, float out.
    """
    a, b, c, norm = _kernel_coefficients(bandwidth)
    u = np.asarray(u, dtype=float)
    ux = u[..., 0]
    uy = u[..., 1]
    q = a * ux * ux + 2.0 * b * ux * uy + c * uy * uy
    out = norm * np.exp(-0.5 * q)
    if out.ndim == 0:
        return float(out)
    return out


def weighted_mixture_field(px, py, weights, grid: GridSpec, bandwidth: Bandwidth) -> np.ndarray:
    """Evaluate sum_i w_i K_H(x - x_i) at every cell center, weights as given.

    This is the unnormalized workhorse behind estimate_demand_field; it is
    linear in the weights. Points are consumed in index order in fixed-size
    blocks, so the per-cell summation order (and hence the bits of the
    result) is reproducible.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if not (px.shape == py.shape == weights.shape) or px.ndim != 1:
        raise ValueError("px, py, weights must be equal-length 1-D arrays")
    a, b, c, norm = _kernel_coefficients(bandwidth)
    if b == 0.0:
        values = _mixture_separable(px, py, weights, grid, a, c)
    else:
        values = _mixture_general(px, py, weights, grid, a, b, c)
    values *= norm
    return values


def _mixture_separable(px, py, weights, grid, a, c):
    # Diagonal H: the kernel factorizes over the axes, so each block is a
    # rank-m update instead of a full point-by-cell quadratic form.
    xc = grid.x_centers()
    yc = grid.y_centers()
    out = np.zeros((grid.nx, grid.ny))
    for k in range(0, px.size, _KDE_CHUNK):
        sl = slice(k, k + _KDE_CHUNK)
        fx = np.exp(-0.5 * a * (xc[None, :] - px[sl, None]) ** 2)
        fy = np.exp(-0.5 * c * (yc[None, :] - py[sl, None]) ** 2)
        out += (weights[sl, None] * fx).T @ fy
    return out


def _mixture_general(px, py, weights, grid, a, b, c):
    X, Y = grid.cell_centers()
    cx = X.ravel()
    cy = Y.ravel()
    out = np.zeros(cx.size)
    for k in range(0, px.size, _KDE_CHUNK):
        sl = slice(k, k + _KDE_CHUNK)
        ux = cx[None, :] - px[sl, None]
        uy = cy[None, :] - py[sl, None]
        q = a * ux * ux + 2.0 * b * ux * uy + c * uy * uy
        np.exp(-0.5 * q, out=q)
        out += (weights[sl, None] * q).sum(axis=0)
    return out.reshape(grid.nx, grid.ny)


def estimate_demand_field(
    dataset: Dataset, period: TimePeriod, grid: GridSpec, bandwidth: Bandwidth
) -> ScalarField:
    """KDE of the demand distribution for one period and band.

    Per-household demand is the sum of the period's records in the selected
    band; weights are demand shares (normalize_weights). The returned field
    integrates to ~1 and carries the snapshot total as scale_kwh.
    """
    demand, counts = dataset.household_demand(period.start, period.end, period.band)
    if counts.sum() == 0:
        raise PeriodError(
            f"no records in period {period.start.isoformat()}..{period.end.isoformat()}"
        )
    weights = normalize_weights(demand)
    active = weights > 0
    x, y = dataset.household_xy
    px, py, w = x[active], y[active], weights[active]
    inside = grid.contains(px, py)
    if not np.all(inside):
        raise CoverageError(
            f"{int((~inside).sum())} contributing household(s) fall outside the grid"
        )
    values = weighted_mixture_field(px, py, w, grid, bandwidth)
    return ScalarField(grid, values, scale_kwh=float(demand.sum()))


def _as_xy(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return points.reshape(-1, 2).astype(float)
    xy = [(p.x, p.y) if isinstance(p, WeightedPoint) else (p[0], p[1]) for p in points]
    return np.asarray(xy, dtype=float)


def default_bandwidth(points, floor: float = 0.0) -> Bandwidth:
    """Silverman rule-of-thumb bandwidth for two dimensions.

    h = sigma_hat * n^(-1/6), with sigma_hat the mean of the per-axis sample
    standard deviations; `floor` (typically the grid cell size) prevents
    sub-grid spikes. Points may be an (n, 2) array or WeightedPoints.
    """
    xy = _as_xy(points)
    n = xy.shape[0]
    if n < 2 or np.unique(xy, axis=0).shape[0] < 2:
        raise BandwidthError("need at least two distinct points to derive a bandwidth")
    sigma = 0.5 * (xy[:, 0].std(ddof=1) + xy[:, 1].std(ddof=1))
    if sigma <= 0:
        raise BandwidthError("all points coincident; supply a bandwidth explicitly")
    h = max(float(sigma) * n ** (-1.0 / 6.0), floor)
    return Bandwidth.isotropic(h)


def make_grid(bounding_box, nx: int, ny: int, h: float) -> GridSpec:
    """Grid covering the box plus a margin of max(2h, 4 dx) per side.

    The margin depends on the cell size it implies, so it is resolved with a
    second pass; the result always keeps at least 2h of margin.
    """
    if h <= 0 or not math.isfinite(h):
        raise GridError(f"grid margin needs a positive smoothing length, got {h}")
    x_min, y_min, x_max, y_max = bounding_box
    if x_max < x_min or y_max < y_min:
        raise GridError("bounding box is inverted")

    def _axis(lo, hi, cells):
        width = hi - lo
        margin = max(2.0 * h, 4.0 * width / cells)
        step = (width + 2.0 * margin) / cells
        margin = max(2.0 * h, 4.0 * step)
        step = (width + 2.0 * margin) / cells
        return lo - margin, step

    x0, dx = _axis(x_min, x_max, nx)
    y0, dy = _axis(y_min, y_max, ny)
    return GridSpec(nx, ny, x0, y0, dx, dy)


# -- hexagonal binning ----------------------------------------------------


def _xy_to_axial(x, y, size):
    """Fractional axial coordinates of pointy-top hexagons with circumradius size."""
    q = (_SQRT3 / 3.0 * x - y / 3.0) / size
    r = (2.0 / 3.0 * y) / size
    return q, r


def _axial_round(qf, rf):
    """Cube rounding; points on shared edges resolve to the axis with the
    smallest rounding residual (deterministic, order-free)."""
    sf = -qf - rf
    q = np.round(qf)
    r = np.round(rf)
    s = np.round(sf)
    dq = np.abs(q - qf)
    dr = np.abs(r - rf)
    ds = np.abs(s - sf)
    fix_q = (dq >= dr) & (dq >= ds)
    fix_r = ~fix_q & (dr >= ds)
    q = np.where(fix_q, -r - s, q)
    r = np.where(fix_r, -q - s, r)
    return q.astype(np.int64), r.astype(np.int64)


def _axial_center(q, r, size):
    x = size * _SQRT3 * (q + r / 2.0)
    y = size * 1.5 * r
    return x, y


def hexbin_demand(dataset: Dataset, period: TimePeriod, hex_size: float) -> list[HexCell]:
    """Aggregate band demand into pointy-top hexagons of the given circumradius.

    Each household with at least one record in the period is assigned to the
    hexagon containing it (edge ties broken by cube rounding); hexagons with
    no such household are omitted. Summed cell demand conserves the period
    total.
    """
    if hex_size <= 0 or not math.isfinite(hex_size):
        raise ValueError(f"hex_size must be positive, got {hex_size}")
    demand, counts = dataset.household_demand(period.start, period.end, period.band)
    active = counts > 0
    x, y = dataset.household_xy
    qf, rf = _xy_to_axial(x[active], y[active], hex_size)
    q, r = _axial_round(qf, rf)
    keys = np.stack([q, r], axis=1)
    unique, inverse = np.unique(keys, axis=0, return_inverse=True)
    sums = np.bincount(inverse, weights=demand[active], minlength=unique.shape[0])
    members = np.bincount(inverse, minlength=unique.shape[0])
    cells = []
    for k in range(unique.shape[0]):
        cx, cy = _axial_center(float(unique[k, 0]), float(unique[k, 1]), hex_size)
        cells.append(HexCell(cx, cy, float(sums[k]), int(members[k])))
    return cells
