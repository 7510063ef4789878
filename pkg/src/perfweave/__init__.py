"""perfweave: harmonize heterogeneous performance telemetry for analysis.

Parsers for sar/perf/GC/load-generator exports, timestamp and
reporting-semantics unification onto one grid, metric-aware imputation,
scale transforms, lag-aware cross-correlation mining, and a two-layer
data-quality model — plus a deterministic synthetic-telemetry generator
that doubles as the test oracle.
"""

__version__ = "0.1.0"

from .correlate import best_lag, ccf, kernel_name, nominate  # noqa: F401
from .impute import ImputationPolicy, MetricClass, default_policy, impute_table  # noqa: F401
from .ingest import ClockSpec, MetricSample, normalize_timestamp  # noqa: F401
from .quality import QualityConfig, assess  # noqa: F401
from .synth import SignalSpec, gen_scenario, gen_signal  # noqa: F401
from .timealign import TidyTable, TimeGrid, adjust_semantics, build_grid, merge, snap_to_grid  # noqa: F401
from .transform import TransformSpec, inverse_transform, transform_series  # noqa: F401
