"""Lag-aware cross-correlation and ranked nomination of related metric pairs.

A plain correlation misses relationships with a temporal offset, so every
pair is scored across a window of lags. Orientation convention, stated in
every report this module emits: for a pair (a, b), a positive lag k means
b trails a by k grid steps, i.e. r(k) correlates (a_t, b_{t+k}).

At each lag the Pearson moments are taken over the overlapping
observations only, which keeps |r| <= 1 exactly and gives every lag
correct semantics. Series must be fully present unless pairwise-complete
mode is requested, in which case the overlap additionally excludes
MISSING cells.

The inner scan is the package's hot path; it runs on a compiled kernel
when the extension is built and on a numpy kernel otherwise (see
`kernel_name`). Both implement identical semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import KERNEL_NAME, all_pairs_best, pair_ccf
from .errors import InsufficientOverlap, InvalidParameter, ZeroVariance
from .timealign import Series, TidyTable

LAG_CONVENTION = "positive lag means metric_b trails metric_a by that many grid steps"

DEFAULT_MAX_LAG = 30
DEFAULT_MIN_OVERLAP = 8


def kernel_name() -> str:
    """Which kernel implementation is active ("cython" or "numpy")."""
    return KERNEL_NAME


@dataclass(frozen=True)
class CorrelationResult:
    metric_a: str
    metric_b: str
    best_lag: int
    r_at_best: float
    n_effective: int
    ccf: tuple[tuple[int, float], ...] = ()


@dataclass(frozen=True)
class SkippedPair:
    metric_a: str
    metric_b: str
    reason: str


@dataclass
class NominationReport:
    results: list[CorrelationResult]
    skipped: list[SkippedPair] = field(default_factory=list)
    max_lag: int = DEFAULT_MAX_LAG
    lag_convention: str = LAG_CONVENTION


def _as_series(x) -> Series:
    if isinstance(x, Series):
        return x
    arr = np.asarray(x, dtype=np.float64)
    return Series(arr, np.ones(arr.shape[0], dtype=bool))


def _center(values: np.ndarray, present: np.ndarray) -> np.ndarray:
    """Zero absent cells and remove the present-cell mean (conditioning only;
    Pearson r is invariant under the shift)."""
    kept = np.where(present, values, 0.0)
    n_present = max(int(present.sum()), 1)
    return np.where(present, values - kept.sum() / n_present, 0.0)


def _checked_window(x: Series, y: Series, max_lag: int, pairwise: bool, min_overlap: int):
    if x.n != y.n:
        raise InvalidParameter(f"series lengths differ: {x.n} vs {y.n}")
    if max_lag < 0:
        raise InvalidParameter("max_lag must be non-negative")
    if max_lag >= x.n / 2:
        raise InvalidParameter(f"max_lag {max_lag} must be below n/2 = {x.n / 2}")
    if min_overlap < 2:
        raise InvalidParameter("min_overlap must be at least 2")
    if not pairwise and not (x.present.all() and y.present.all()):
        raise InvalidParameter(
            "series contain MISSING cells; impute first or use pairwise=True"
        )
    xc = _center(x.values, x.present)
    yc = _center(y.values, y.present)
    n_eff, r, zv = pair_ccf(
        xc, yc,
        np.ascontiguousarray(x.present, dtype=np.uint8),
        np.ascontiguousarray(y.present, dtype=np.uint8),
        int(max_lag),
    )
    if zv.any():
        lag = int(np.flatnonzero(zv)[0]) - max_lag
        side = "x" if zv[np.flatnonzero(zv)[0]] & 1 else "y"
        raise ZeroVariance(f"constant {side}-side window at lag {lag}")
    if (n_eff < min_overlap).any():
        lag = int(np.argmin(n_eff)) - max_lag
        raise InsufficientOverlap(
            f"overlap {int(n_eff.min())} at lag {lag} is below min_overlap {min_overlap}"
        )
    return n_eff, r


def ccf(x, y, max_lag: int, *, pairwise: bool = False,
        min_overlap: int = DEFAULT_MIN_OVERLAP) -> list[tuple[int, float]]:
    """Cross-correlation function over lags -max_lag..+max_lag.

    r(k) is the Pearson correlation of the overlapped pairs (x_t, y_{t+k})
    with means and variances computed over that overlap.
    """
    _, r = _checked_window(_as_series(x), _as_series(y), max_lag, pairwise, min_overlap)
    return [(lag - max_lag, float(r[lag])) for lag in range(2 * max_lag + 1)]


def _scan_best(curve: list[tuple[int, float]]) -> tuple[int, float]:
    """Largest |r|; ties go to the smaller |lag|, negative before positive."""
    by_lag = dict(curve)
    max_lag = max(lag for lag, _ in curve)
    best = (0, by_lag[0])
    best_abs = abs(by_lag[0])
    for k in range(1, max_lag + 1):
        for lag in (-k, k):
            if abs(by_lag[lag]) > best_abs:
                best = (lag, by_lag[lag])
                best_abs = abs(by_lag[lag])
    return best


def best_lag(x, y, max_lag: int, *, pairwise: bool = False,
             min_overlap: int = DEFAULT_MIN_OVERLAP) -> tuple[int, float]:
    """The (lag, r) with the largest |r| over the window."""
    return _scan_best(ccf(x, y, max_lag, pairwise=pairwise, min_overlap=min_overlap))


_STATUS_REASON = {1: "zero variance in some lag window", 2: "insufficient overlap at some lag"}


def nominate(
    table: TidyTable,
    max_lag: int = DEFAULT_MAX_LAG,
    top_k: int = 50,
    min_abs_r: float = 0.5,
    *,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
    pairwise: bool = False,
    with_curves: bool = False,
) -> NominationReport:
    """Score every unordered column pair by best lag and rank the strongest.

    Results keep |r| >= min_abs_r, sorted by |r| descending with
    lexicographic (metric_a, metric_b) tie-breaks, truncated to top_k.
    Pairs whose windows are degenerate are skipped with a reason, never
    aborting the run. Output is deterministic for a fixed table.
    """
    if table.n_cols < 2:
        raise InvalidParameter("nominate needs at least 2 columns")
    if max_lag < 0 or max_lag >= table.n_points / 2:
        raise InvalidParameter(f"max_lag {max_lag} must lie in [0, n/2)")
    if top_k < 0:
        raise InvalidParameter("top_k must be non-negative")
    if not pairwise and not table.present.all():
        raise InvalidParameter(
            "table contains MISSING cells; impute first or use pairwise=True"
        )
    m = table.n_cols
    cols = table.column_ids
    vals = np.empty((m, table.n_points))
    for j in range(m):
        vals[j] = _center(table.values[:, j], table.present[:, j])
    pres = np.ascontiguousarray(table.present.T, dtype=np.uint8)
    lags, rs, n_effs, statuses = all_pairs_best(vals, pres, int(max_lag), int(min_overlap))

    results = []
    skipped = []
    p = 0
    for i in range(m):
        for j in range(i + 1, m):
            st = int(statuses[p])
            if st:
                reason = "; ".join(_STATUS_REASON[b] for b in (1, 2) if st & b)
                skipped.append(SkippedPair(cols[i], cols[j], reason))
            elif math.isfinite(rs[p]) and abs(rs[p]) >= min_abs_r:
                results.append(
                    CorrelationResult(cols[i], cols[j], int(lags[p]),
                                      float(rs[p]), int(n_effs[p]))
                )
            p += 1
    results.sort(key=lambda c: (-abs(c.r_at_best), c.metric_a, c.metric_b))
    results = results[:top_k]
    if with_curves:
        results = [
            CorrelationResult(
                c.metric_a, c.metric_b, c.best_lag, c.r_at_best, c.n_effective,
                tuple(ccf(table.series(c.metric_a), table.series(c.metric_b),
                          max_lag, pairwise=pairwise, min_overlap=min_overlap)),
            )
            for c in results
        ]
    return NominationReport(results, skipped, max_lag)


# --- report serialization -------------------------------------------------------


def report_to_text(report: NominationReport) -> str:
    """Delimited nomination report: metric_a;metric_b;best_lag;r;n_effective."""
    lines = [
        f"# lag convention: {report.lag_convention}",
        "# metric_a;metric_b;best_lag;r;n_effective",
    ]
    for c in report.results:
        lines.append(
            f"{c.metric_a};{c.metric_b};{c.best_lag};{c.r_at_best!r};{c.n_effective}"
        )
    for s in report.skipped:
        lines.append(f"# skipped: {s.metric_a};{s.metric_b} ({s.reason})")
    return "\n".join(lines) + "\n"


def report_to_json_obj(report: NominationReport) -> dict:
    return {
        "lag_convention": report.lag_convention,
        "max_lag": report.max_lag,
        "results": [
            {
                "metric_a": c.metric_a,
                "metric_b": c.metric_b,
                "best_lag": c.best_lag,
                "r": c.r_at_best,
                "n_effective": c.n_effective,
                **({"ccf": [[lag, r] for lag, r in c.ccf]} if c.ccf else {}),
            }
            for c in report.results
        ],
        "skipped": [
            {"metric_a": s.metric_a, "metric_b": s.metric_b, "reason": s.reason}
            for s in report.skipped
        ],
    }
