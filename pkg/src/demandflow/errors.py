"""Exception types shared across the demandflow package."""


class DemandFlowError(Exception):
    """Base class for all demandflow data and computation errors."""


class StreamError(DemandFlowError):
    """Input stream could not be read or decoded as UTF-8 text."""


class FormatError(DemandFlowError):
    """CSV structure is invalid (missing or malformed header)."""


class EmptyDatasetError(DemandFlowError):
    """No rows survived validation, or a dataset was built from nothing.

    Carries the validation report of the failed parse when one exists,
    so callers can still show per-row reasons.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DuplicateRecordError(DemandFlowError):
    """Two records share the same (household, date) key."""


class LocationConflictError(DemandFlowError):
    """A household appears at more than one location in the input."""


class PeriodError(DemandFlowError):
    """A time period is inverted, outside the dataset range, or has no records."""


class DegenerateWeightsError(DemandFlowError):
    """All demand weights are zero; no density field can be formed."""


class BandwidthError(DemandFlowError):
    """Bandwidth matrix is not symmetric positive definite, or cannot be
    derived from the points (fewer than two distinct locations)."""


class GridError(DemandFlowError):
    """Grid specification is unusable: too small, mismatched between fields,
    or otherwise inconsistent."""


class CoverageError(GridError):
    """Grid does not cover all contributing household positions."""


class TaskError(DemandFlowError):
    """Shift task definition violates its invariants."""


class SplitError(TaskError):
    """A regular split produced a sub-period with zero days."""
