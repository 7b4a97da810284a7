"""Spatiotemporal energy demand analytics.

Household smart-meter records become daily demand series, continuous KDE
demand fields, and potential-flow demand-shift analyses (phi as the field
discrepancy between periods, nu as its gradient). The service and cli
modules wrap the same operations for interactive and scripted use.
"""

from .errors import (
    BandwidthError,
    CoverageError,
    DegenerateWeightsError,
    DemandFlowError,
    DuplicateRecordError,
    EmptyDatasetError,
    FormatError,
    GridError,
    LocationConflictError,
    PeriodError,
    SplitError,
    StreamError,
    TaskError,
)
from .geo import EARTH_RADIUS_M, inverse_project, project_coordinates
from .ingest import (
    CSV_HEADER,
    ConsumptionRecord,
    Dataset,
    ValidationReport,
    build_dataset,
    parse_consumption_csv,
)
from .shift import (
    DONE,
    FAILED,
    MULTI_PERIOD,
    PEAK_VALLEY,
    PENDING,
    REGULAR_SPLIT,
    RUNNING,
    TASK_KINDS,
    Arrow,
    PotentialField,
    ShiftPair,
    ShiftResult,
    ShiftTask,
    VectorField,
    WindowStat,
    expand_task,
    flow_arrows,
    gradient,
    pair_label,
    potential_field,
    run_task,
    validate_task,
    velocity_field,
    window_summary,
)
from .spatial import (
    Bandwidth,
    GridSpec,
    HexCell,
    ScalarField,
    WeightedPoint,
    default_bandwidth,
    estimate_demand_field,
    gaussian_kernel,
    hexbin_demand,
    make_grid,
    normalize_weights,
    weighted_mixture_field,
)
from .temporal import (
    BANDS,
    FULL_DAY,
    GRANULARITIES,
    MONTHLY,
    PEAK_TO_TOTAL,
    PEAK_TO_VALLEY,
    PEAK_WINDOW,
    QUARTERLY,
    RATIO_KINDS,
    VALLEY_WINDOW,
    YEARLY,
    AuxLine,
    AuxSegment,
    DemandSeries,
    MeterStats,
    TimePeriod,
    aux_lines,
    daily_series,
    meter_stats,
    ratio_series,
)

__version__ = "0.1.0"
