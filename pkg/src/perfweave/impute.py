"""Metric-aware repair of MISSING cells.

Event-derived metrics (GC) get zero-fill: a missing timestamp means no
event occurred, so zero is the truth, not an estimate. Sampled metrics
(sar, perf, load generator) get linear interpolation, or median/mean when
the workload is declared steady. Present values are never altered, and
every filled cell is recorded in a provenance mask so later analyses can
discount it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fnmatch import fnmatchcase

import numpy as np

from .errors import AllMissing, InvalidParameter
from .timealign import Series, TidyTable

KIND_EVENT = "event-based"
KIND_SAMPLE = "sample-based"

METHODS = frozenset({"zero", "linear-interpolation", "mean", "median", "max", "min", "none"})
BOUNDARIES = frozenset({"leave-missing", "nearest"})

# Methods that need at least one present value to fill from.
_DATA_DEPENDENT = frozenset({"linear-interpolation", "mean", "median", "max", "min"})


@dataclass(frozen=True)
class MetricClass:
    kind: str
    steady_state: bool = False

    def __post_init__(self):
        if self.kind not in (KIND_EVENT, KIND_SAMPLE):
            raise InvalidParameter(f"unknown metric kind {self.kind!r}")


@dataclass(frozen=True)
class ImputationPolicy:
    method: str
    boundary: str = "leave-missing"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameter(f"unknown imputation method {self.method!r}")
        if self.boundary not in BOUNDARIES:
            raise InvalidParameter(f"unknown boundary rule {self.boundary!r}")


def classify_metric(metric_name: str, *, steady_globs: tuple[str, ...] = ()) -> MetricClass:
    """Default class: gc.* is event-based, everything else sample-based."""
    kind = KIND_EVENT if metric_name.startswith("gc.") else KIND_SAMPLE
    steady = any(fnmatchcase(metric_name, g) for g in steady_globs)
    return MetricClass(kind, steady)


def default_policy(cls: MetricClass) -> ImputationPolicy:
    """Policy a metric class earns without explicit configuration.

    Event metrics are zero-filled (no event happened at the gap); steady
    sampled metrics take the median; everything else is interpolated.
    """
    if cls.kind == KIND_EVENT:
        return ImputationPolicy("zero")
    if cls.steady_state:
        return ImputationPolicy("median")
    return ImputationPolicy("linear-interpolation")


def impute_series(series: Series, policy: ImputationPolicy) -> tuple[Series, np.ndarray]:
    """Fill MISSING cells of one series; returns (filled, imputed-mask).

    Constant-fill methods (zero/mean/median/max/min) fill every gap
    including boundaries. Interpolation needs support on both sides, so
    head/tail gaps follow the boundary rule: stay MISSING or copy the
    nearest present value. Present cells pass through untouched.
    """
    present = series.present
    values = series.values.copy()
    missing = ~present
    imputed = np.zeros(series.n, dtype=bool)
    if policy.method == "none" or not missing.any():
        return Series(values, present.copy()), imputed
    if policy.method != "zero" and not present.any():
        raise AllMissing(f"method {policy.method!r} needs at least one present value")

    new_present = present.copy()
    if policy.method == "zero":
        fill_mask = missing
        values[fill_mask] = 0.0
    elif policy.method in ("mean", "median", "max", "min"):
        agg = {"mean": np.mean, "median": np.median, "max": np.max, "min": np.min}
        fill_mask = missing
        values[fill_mask] = agg[policy.method](series.values[present])
    else:  # linear-interpolation
        idx = np.arange(series.n)
        known = idx[present]
        interp = np.interp(idx, known, series.values[present])
        interior = missing & (idx >= known[0]) & (idx <= known[-1])
        boundary = missing & ~interior
        fill_mask = interior.copy()
        values[interior] = interp[interior]
        if policy.boundary == "nearest" and boundary.any():
            # np.interp already clamps to the nearest end value.
            values[boundary] = interp[boundary]
            fill_mask |= boundary
    new_present |= fill_mask
    imputed |= fill_mask
    values[~new_present] = 0.0
    return Series(values, new_present), imputed


@dataclass
class ImputeResult:
    table: TidyTable
    imputed: np.ndarray  # (n_points, n_cols) bool provenance mask
    imputed_fraction: dict[str, float]  # per column id


def resolve_policy(
    metric_name: str,
    policy_map: dict[str, ImputationPolicy],
    *,
    steady_globs: tuple[str, ...] = (),
) -> ImputationPolicy:
    """Explicit policy from the first matching glob, else the class default."""
    for pattern, policy in policy_map.items():
        if fnmatchcase(metric_name, pattern):
            return policy
    return default_policy(classify_metric(metric_name, steady_globs=steady_globs))


def impute_table(
    table: TidyTable,
    policy_map: dict[str, ImputationPolicy] | None = None,
    *,
    steady_globs: tuple[str, ...] = (),
) -> ImputeResult:
    """Columnwise imputation; idempotent, value-preserving.

    Per-column failures are re-raised with the column identity attached.
    """
    policy_map = policy_map or {}
    values = table.values.copy()
    present = table.present.copy()
    imputed = np.zeros_like(present)
    fractions: dict[str, float] = {}
    for j, col in enumerate(table.columns):
        policy = resolve_policy(col.metric_name, policy_map, steady_globs=steady_globs)
        try:
            filled, mask = impute_series(table.series(j), policy)
        except AllMissing as exc:
            raise AllMissing(f"column {col.cid}: {exc}") from exc
        values[:, j] = filled.values
        present[:, j] = filled.present
        imputed[:, j] = mask
        fractions[col.cid] = float(mask.sum()) / table.n_points
    return ImputeResult(table.with_cells(values, present), imputed, fractions)


def mask_to_text(table: TidyTable, imputed: np.ndarray) -> str:
    """Provenance mask as long-format text `ts;host;metric;imputed`."""
    lines = ["# ts;host;metric;imputed"]
    pts = table.grid.points()
    for i in range(table.n_points):
        for j, col in enumerate(table.columns):
            if table.present[i, j] or imputed[i, j]:
                flag = 1 if imputed[i, j] else 0
                lines.append(f"{int(pts[i])};{col.host_id};{col.metric_name};{flag}")
    return "\n".join(lines) + "\n"
