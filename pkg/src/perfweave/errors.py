"""Exception taxonomy for the whole toolkit.

Every error raised by perfweave derives from :class:`PerfweaveError` so
callers can catch the library as a unit. Row-level parse errors carry the
offending 1-based line number.
"""


class PerfweaveError(Exception):
    """Base class for all perfweave errors."""


class InvalidParameter(PerfweaveError):
    """A call violated a documented precondition (bad step, lag window, ...)."""


# --- timestamps -------------------------------------------------------------

class UnparseableTimestamp(PerfweaveError):
    """Raw timestamp does not match the declared clock."""


class NegativeEpoch(PerfweaveError):
    """Instant before 1970-01-01 UTC; almost always a unit misconfiguration."""


# --- ingest -----------------------------------------------------------------

class RowError(PerfweaveError):
    """Parse error anchored to an input line."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MalformedRow(RowError):
    """Wrong column count or otherwise unusable record."""


class NonNumericValue(RowError):
    """A value field did not parse as a finite number."""


class NegativePause(RowError):
    """GC pause duration below zero."""


class NegativeThroughput(RowError):
    """Load-generator throughput below zero."""


class DuplicateSample(PerfweaveError):
    """Two rows described the same (timestamp, counter) key."""


class CannotInferInterval(PerfweaveError):
    """No repeated timestamps to infer a reporting interval from."""


class InvalidSample(PerfweaveError):
    """A MetricSample violated its invariants."""


# --- time alignment ----------------------------------------------------------

class EmptyInput(PerfweaveError):
    """Operation requires at least one sample."""


class InconsistentInterval(PerfweaveError):
    """Samples of one metric disagree about their reporting interval."""


class GridMismatch(PerfweaveError):
    """Series sets being merged do not share one time grid."""


# --- imputation ---------------------------------------------------------------

class AllMissing(PerfweaveError):
    """Nothing present to impute from."""


# --- transforms ---------------------------------------------------------------

class InsufficientData(PerfweaveError):
    """Fewer than two present values."""


class ZeroVariance(PerfweaveError):
    """Constant data where variation is required."""


class DegenerateRange(PerfweaveError):
    """min == max, min-max scaling undefined."""


class NonPositive(PerfweaveError):
    """log transform saw a non-positive argument."""


class DivZero(PerfweaveError):
    """inverse transform saw a zero."""


class MissingFitted(PerfweaveError):
    """inverse_transform called without the parameters fitted forward."""


# --- correlation ---------------------------------------------------------------

class InsufficientOverlap(PerfweaveError):
    """Too few overlapping observations at some lag to correlate."""


# --- synthesis -----------------------------------------------------------------

class BadSpec(PerfweaveError):
    """Signal specification out of its valid domain."""


class BadLag(PerfweaveError):
    """Lag outside [0, n)."""


class BadPattern(PerfweaveError):
    """Missingness pattern out of bounds."""


class SchemaMismatch(PerfweaveError):
    """Samples do not fit the requested export format."""


class UnknownScenario(PerfweaveError):
    """No generator for the requested scenario name."""


# --- cli -------------------------------------------------------------------------

class ConfigError(PerfweaveError):
    """Bad or missing configuration; message names the offending field."""


class PlotUnavailable(PerfweaveError):
    """Plot backend missing or unusable; never fatal."""
