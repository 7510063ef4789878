"""Scale transforms that make metrics of wildly different magnitudes comparable.

CPU percentages live in [0, 100], network rates around 1e6, cache-miss
ratios around 1e-3; on a common axis the small ones flatline. Each
transform returns the parameters it fitted so the mapping can be inverted
exactly. MISSING cells pass through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from fnmatch import fnmatchcase

import numpy as np

from .errors import (
    DegenerateRange,
    DivZero,
    InsufficientData,
    InvalidParameter,
    MissingFitted,
    NonPositive,
    ZeroVariance,
)
from .timealign import Series, TidyTable

METHODS = frozenset({"center", "zscore", "minmax", "log", "inverse"})


@dataclass(frozen=True)
class TransformSpec:
    method: str
    log_offset: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameter(f"unknown transform method {self.method!r}")
        if self.log_offset < 0:
            raise InvalidParameter("log_offset must be non-negative")


def transform_series(series: Series, spec: TransformSpec) -> tuple[Series, dict[str, float]]:
    """Apply `spec` to the present cells; returns (transformed, fitted params)."""
    present = series.present
    if int(present.sum()) < 2:
        raise InsufficientData("transform needs at least 2 present values")
    x = series.values[present]
    out = series.values.copy()
    m = spec.method
    if m == "center":
        mean = float(np.mean(x))
        out[present] = x - mean
        fitted = {"mean": mean}
    elif m == "zscore":
        mean = float(np.mean(x))
        sd = float(np.std(x, ddof=1))
        if sd == 0.0:
            raise ZeroVariance("zscore on a constant series")
        out[present] = (x - mean) / sd
        fitted = {"mean": mean, "sd": sd}
    elif m == "minmax":
        lo, hi = float(np.min(x)), float(np.max(x))
        if hi == lo:
            raise DegenerateRange("minmax on a constant series")
        out[present] = (x - lo) / (hi - lo)
        fitted = {"min": lo, "max": hi}
    elif m == "log":
        shifted = x + spec.log_offset
        if np.any(shifted <= 0):
            raise NonPositive(
                f"log needs x + offset > 0; worst value {float(np.min(shifted))}"
            )
        out[present] = np.log(shifted)
        fitted = {"offset": spec.log_offset}
    else:  # inverse
        if np.any(x == 0):
            raise DivZero("inverse transform with a zero value")
        out[present] = 1.0 / x
        fitted = {}
    out[~present] = 0.0
    return Series(out, present.copy()), fitted


def inverse_transform(series: Series, spec: TransformSpec, fitted: dict[str, float]) -> Series:
    """Undo transform_series given its fitted parameters (1e-9-exact round trip)."""
    required = {"center": ("mean",), "zscore": ("mean", "sd"),
                "minmax": ("min", "max"), "log": ("offset",), "inverse": ()}[spec.method]
    if any(k not in fitted for k in required):
        raise MissingFitted(f"{spec.method} inversion needs {required}, got {sorted(fitted)}")
    present = series.present
    y = series.values[present]
    out = series.values.copy()
    m = spec.method
    if m == "center":
        out[present] = y + fitted["mean"]
    elif m == "zscore":
        out[present] = y * fitted["sd"] + fitted["mean"]
    elif m == "minmax":
        out[present] = y * (fitted["max"] - fitted["min"]) + fitted["min"]
    elif m == "log":
        out[present] = np.exp(y) - fitted["offset"]
    else:
        if np.any(y == 0):
            raise DivZero("cannot invert a zero")
        out[present] = 1.0 / y
    out[~present] = 0.0
    return Series(out, present.copy())


@dataclass
class TransformResult:
    table: TidyTable
    fitted: dict[str, dict[str, float]]  # column id -> params
    applied: dict[str, str]  # column id -> method


def resolve_spec(metric_name: str, spec_map: dict[str, TransformSpec]) -> TransformSpec | None:
    for pattern, spec in spec_map.items():
        if fnmatchcase(metric_name, pattern):
            return spec
    return None


def transform_table(table: TidyTable, spec_map: dict[str, TransformSpec]) -> TransformResult:
    """Apply the first matching spec per column; unmatched columns pass through."""
    values = table.values.copy()
    present = table.present.copy()
    fitted: dict[str, dict[str, float]] = {}
    applied: dict[str, str] = {}
    for j, col in enumerate(table.columns):
        spec = resolve_spec(col.metric_name, spec_map)
        if spec is None:
            continue
        transformed, params = transform_series(table.series(j), spec)
        values[:, j] = transformed.values
        fitted[col.cid] = params
        applied[col.cid] = spec.method
    return TransformResult(table.with_cells(values, present), fitted, applied)
