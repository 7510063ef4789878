"""Reporting-semantics adjustment, gridding, and the tidy table.

Different tools stamp their numbers differently: an interval average is
best attributed to the middle of its interval, an end-of-interval reading
to the interval boundary, a mid-interval probe to the middle. After
`adjust_semantics` every timestamp denotes the instant its value best
represents; `snap_to_grid` then places samples on a uniform grid and
`merge` outer-joins the per-metric series into one :class:`TidyTable`
whose cells are either a finite value or explicitly MISSING.

MISSING is a cell state (a boolean presence mask), never a numeric
sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    EmptyInput,
    GridMismatch,
    InconsistentInterval,
    InvalidParameter,
    MalformedRow,
)
from .ingest import (
    SEM_INSTANT_END,
    SEM_INSTANT_MID,
    SEM_INTERVAL_AVG,
    MetricSample,
    _parse_value,
)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid: point i sits at start_ns + i * step_ns."""

    start_ns: int
    step_ns: int
    n_points: int

    def __post_init__(self):
        if self.step_ns <= 0:
            raise InvalidParameter(f"grid step_ns must be positive, got {self.step_ns}")
        if self.n_points < 2:
            raise InvalidParameter(f"grid needs at least 2 points, got {self.n_points}")

    def points(self) -> np.ndarray:
        return self.start_ns + self.step_ns * np.arange(self.n_points, dtype=np.int64)

    @property
    def end_ns(self) -> int:
        return self.start_ns + self.step_ns * (self.n_points - 1)


@dataclass(frozen=True)
class Column:
    """Identity and metadata of one table column."""

    host_id: str
    metric_name: str
    unit: str = ""
    semantics: str = SEM_INSTANT_END

    @property
    def cid(self) -> str:
        return f"{self.host_id}:{self.metric_name}"

    @property
    def key(self) -> tuple[str, str]:
        return (self.host_id, self.metric_name)


@dataclass
class Series:
    """One column of values with an explicit presence mask."""

    values: np.ndarray
    present: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.present = np.asarray(self.present, dtype=bool)
        if self.values.shape != self.present.shape or self.values.ndim != 1:
            raise InvalidParameter("values and present must be equal-length 1-D arrays")

    @classmethod
    def from_list(cls, items) -> "Series":
        """Build from a list where None marks MISSING."""
        present = np.array([v is not None for v in items], dtype=bool)
        values = np.array([0.0 if v is None else float(v) for v in items])
        return cls(values, present)

    def to_list(self) -> list[float | None]:
        return [float(v) if p else None for v, p in zip(self.values, self.present)]

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def n_present(self) -> int:
        return int(self.present.sum())

    def copy(self) -> "Series":
        return Series(self.values.copy(), self.present.copy())


@dataclass(frozen=True)
class SnapDiagnostic:
    """Warning emitted while snapping: a drop or a collision."""

    kind: str  # "dropped" | "collision"
    column: Column
    ts: int
    detail: str


@dataclass
class SeriesSet:
    """Per-column series on one grid, plus snapping diagnostics."""

    grid: TimeGrid
    series: dict[Column, Series]
    diagnostics: list[SnapDiagnostic] = field(default_factory=list)


@dataclass
class TidyTable:
    """Wide table over a uniform grid; one column per (host, metric)."""

    grid: TimeGrid
    columns: list[Column]
    values: np.ndarray  # (n_points, n_cols) float64; meaningful where present
    present: np.ndarray  # (n_points, n_cols) bool

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.present = np.asarray(self.present, dtype=bool)
        n, m = self.grid.n_points, len(self.columns)
        if self.values.shape != (n, m) or self.present.shape != (n, m):
            raise InvalidParameter(
                f"cell arrays must be shaped ({n}, {m}), got {self.values.shape}"
            )
        keys = [c.key for c in self.columns]
        if len(set(keys)) != len(keys):
            raise InvalidParameter("duplicate column identifiers")

    @property
    def n_points(self) -> int:
        return self.grid.n_points

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def column_ids(self) -> list[str]:
        return [c.cid for c in self.columns]

    def col_index(self, cid: str) -> int:
        for i, c in enumerate(self.columns):
            if c.cid == cid:
                return i
        raise KeyError(cid)

    def series(self, col: int | str) -> Series:
        i = col if isinstance(col, int) else self.col_index(col)
        return Series(self.values[:, i].copy(), self.present[:, i].copy())

    def with_cells(self, values: np.ndarray, present: np.ndarray) -> "TidyTable":
        return TidyTable(self.grid, list(self.columns), values, present)

    def long_rows(self):
        """Yield (ts, host, metric, value) for present cells, ts-major."""
        pts = self.grid.points()
        for i in range(self.n_points):
            for j, col in enumerate(self.columns):
                if self.present[i, j]:
                    yield int(pts[i]), col.host_id, col.metric_name, float(self.values[i, j])


# --- operations -----------------------------------------------------------------


def adjust_semantics(
    samples: list[MetricSample], *, mid_stamped_at_end: frozenset[str] | set[str] = frozenset()
) -> list[MetricSample]:
    """Re-attribute each timestamp to the instant its value represents.

    interval-average moves to the interval midpoint (ts - interval/2);
    instant-at-end and event stay put. instant-mid stays put unless its
    source is listed in `mid_stamped_at_end`, declaring that the tool
    stamps mid-interval readings at the interval boundary.

    Values, counts, and the semantics field are preserved; only ts moves,
    by exactly 0 or interval/2. Samples of one metric must agree on their
    interval to within 1%.
    """
    by_metric: dict[tuple[str, str, str], list[int]] = {}
    for s in samples:
        by_metric.setdefault((s.source_id, s.host_id, s.metric_name), []).append(s.interval_ns)
    for key, intervals in by_metric.items():
        lo, hi = min(intervals), max(intervals)
        if lo != hi and hi - lo > 0.01 * hi:
            raise InconsistentInterval(
                f"{key[2]} from {key[0]}@{key[1]}: interval_ns spans {lo}..{hi}"
            )
    out = []
    for s in samples:
        shift = 0
        if s.semantics == SEM_INTERVAL_AVG:
            shift = s.interval_ns // 2
        elif s.semantics == SEM_INSTANT_MID and s.source_id in mid_stamped_at_end:
            shift = s.interval_ns // 2
        if shift > s.ts:
            # midpoint would precede the epoch: the declared interval cannot
            # be right for a stamp this early
            raise InconsistentInterval(
                f"{s.metric_name}: interval {s.interval_ns} ns puts the interval "
                f"midpoint before the epoch (ts {s.ts})"
            )
        out.append(replace(s, ts=s.ts - shift) if shift else s)
    return out


def build_grid(samples: list[MetricSample], step_ns: int) -> TimeGrid:
    """Smallest step-aligned grid covering every sample timestamp."""
    if step_ns <= 0:
        raise InvalidParameter(f"step_ns must be positive, got {step_ns}")
    if not samples:
        raise EmptyInput("cannot build a grid from zero samples")
    ts_min = min(s.ts for s in samples)
    ts_max = max(s.ts for s in samples)
    start = (ts_min // step_ns) * step_ns
    n = max(2, -((ts_max - start) // -step_ns) + 1)  # ceil + covering point
    return TimeGrid(start, step_ns, int(n))


def snap_to_grid(
    samples: list[MetricSample], grid: TimeGrid, tolerance_ns: int | None = None
) -> SeriesSet:
    """Place samples on the nearest grid point within tolerance.

    Default tolerance is step/4. Samples farther than the tolerance from
    any grid point are dropped with a diagnostic; when two samples snap to
    one point the later one wins and a collision diagnostic is recorded.
    """
    if tolerance_ns is None:
        tolerance_ns = grid.step_ns // 4
    if not 0 <= tolerance_ns < grid.step_ns / 2:
        raise InvalidParameter(
            f"tolerance_ns must lie in [0, step/2), got {tolerance_ns} for step {grid.step_ns}"
        )
    per_column: dict[Column, list[tuple[int, int, float]]] = {}
    for seq, s in enumerate(samples):
        col = Column(s.host_id, s.metric_name, s.unit, s.semantics)
        per_column.setdefault(col, []).append((s.ts, seq, s.value))

    out: dict[Column, Series] = {}
    diagnostics: list[SnapDiagnostic] = []
    for col in sorted(per_column, key=lambda c: c.key):
        values = np.zeros(grid.n_points)
        present = np.zeros(grid.n_points, dtype=bool)
        for ts, _seq, value in sorted(per_column[col], key=lambda t: (t[0], t[1])):
            idx = (ts - grid.start_ns + grid.step_ns // 2) // grid.step_ns
            idx = min(max(idx, 0), grid.n_points - 1)
            if abs(ts - (grid.start_ns + idx * grid.step_ns)) > tolerance_ns:
                diagnostics.append(
                    SnapDiagnostic("dropped", col, ts,
                                   f"no grid point within {tolerance_ns} ns")
                )
                continue
            if present[idx]:
                diagnostics.append(
                    SnapDiagnostic("collision", col, ts,
                                   f"grid point {idx} already filled; later sample wins")
                )
            values[idx] = value
            present[idx] = True
        out[col] = Series(values, present)
    return SeriesSet(grid, out, diagnostics)


def merge(*sets: SeriesSet) -> TidyTable:
    """Outer-join series sets sharing one grid into a tidy table.

    Column order is deterministic: (host, metric) lexicographic. When the
    same column appears in several sets, later sets win cell-wise, which
    makes the merge idempotent.
    """
    if not sets:
        raise EmptyInput("nothing to merge")
    grid = sets[0].grid
    for ss in sets[1:]:
        if ss.grid != grid:
            raise GridMismatch(f"grids differ: {ss.grid} vs {grid}")
    merged: dict[Column, Series] = {}
    by_key: dict[tuple[str, str], Column] = {}
    for ss in sets:
        for col, series in ss.series.items():
            clash = by_key.setdefault(col.key, col)
            if clash != col:
                raise GridMismatch(
                    f"column {col.cid} declared twice with different metadata "
                    f"({clash.unit}/{clash.semantics} vs {col.unit}/{col.semantics})"
                )
            if col in merged:
                base = merged[col]
                take = series.present
                base.values[take] = series.values[take]
                base.present |= take
            else:
                merged[col] = series.copy()
    columns = sorted(merged, key=lambda c: c.key)
    values = np.zeros((grid.n_points, len(columns)))
    present = np.zeros((grid.n_points, len(columns)), dtype=bool)
    for j, col in enumerate(columns):
        values[:, j] = merged[col].values
        present[:, j] = merged[col].present
    values[~present] = 0.0
    return TidyTable(grid, columns, values, present)


# --- text forms -----------------------------------------------------------------
#
# Both forms carry the grid and column metadata as comment lines so that
# each alone rebuilds the full table and the two convert into each other
# bit-exactly. Values are rendered with repr(), which round-trips floats.


def _meta_lines(table: TidyTable) -> list[str]:
    lines = [f"# grid;{table.grid.start_ns};{table.grid.step_ns};{table.grid.n_points}"]
    for c in table.columns:
        lines.append(f"# column;{c.host_id};{c.metric_name};{c.unit};{c.semantics}")
    return lines


def _parse_meta(text: str) -> tuple[TimeGrid, list[Column]]:
    grid = None
    columns = []
    for line in text.splitlines():
        if line.startswith("# grid;"):
            _, start, step, n = line[2:].split(";")
            grid = TimeGrid(int(start), int(step), int(n))
        elif line.startswith("# column;"):
            _, host, metric, unit, sem = line[2:].split(";")
            columns.append(Column(host, metric, unit, sem))
    if grid is None:
        raise MalformedRow(1, "missing '# grid;...' metadata line")
    return grid, columns


def to_long_text(table: TidyTable) -> str:
    """Long form `ts;host;metric;value`, MISSING rows omitted."""
    lines = _meta_lines(table)
    lines.append("# ts;host;metric;value")
    for ts, host, metric, value in table.long_rows():
        lines.append(f"{ts};{host};{metric};{value!r}")
    return "\n".join(lines) + "\n"


def to_wide_text(table: TidyTable) -> str:
    """Wide form: header row, one row per grid point, empty cells for MISSING."""
    lines = _meta_lines(table)
    lines.append(";".join(["ts"] + table.column_ids))
    pts = table.grid.points()
    for i in range(table.n_points):
        cells = [str(int(pts[i]))]
        for j in range(table.n_cols):
            cells.append(repr(float(table.values[i, j])) if table.present[i, j] else "")
        lines.append(";".join(cells))
    return "\n".join(lines) + "\n"


def from_long_text(text: str) -> TidyTable:
    grid, columns = _parse_meta(text)
    idx = {c.key: j for j, c in enumerate(columns)}
    values = np.zeros((grid.n_points, len(columns)))
    present = np.zeros((grid.n_points, len(columns)), dtype=bool)
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split(";")
        if len(fields) != 4:
            raise MalformedRow(line_no, f"expected 4 fields, got {len(fields)}")
        ts, host, metric, value = fields
        key = (host, metric)
        if key not in idx:
            raise MalformedRow(line_no, f"row for undeclared column {host}:{metric}")
        i, rem = divmod(int(ts) - grid.start_ns, grid.step_ns)
        if rem or not 0 <= i < grid.n_points:
            raise MalformedRow(line_no, f"ts {ts} is not a grid point")
        values[int(i), idx[key]] = _parse_value(value, line_no)
        present[int(i), idx[key]] = True
    return TidyTable(grid, columns, values, present)


def from_wide_text(text: str) -> TidyTable:
    grid, columns = _parse_meta(text)
    values = np.zeros((grid.n_points, len(columns)))
    present = np.zeros((grid.n_points, len(columns)), dtype=bool)
    data_lines = [
        (no, ln.strip()) for no, ln in enumerate(text.splitlines(), start=1)
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if not data_lines or not data_lines[0][1].startswith("ts"):
        raise MalformedRow(1, "missing wide header row")
    body = data_lines[1:]
    if len(body) != grid.n_points:
        raise MalformedRow(1, f"expected {grid.n_points} rows, got {len(body)}")
    for i, (line_no, line) in enumerate(body):
        cells = line.split(";")
        if len(cells) != len(columns) + 1:
            raise MalformedRow(line_no, f"expected {len(columns) + 1} cells, got {len(cells)}")
        if int(cells[0]) != grid.start_ns + i * grid.step_ns:
            raise MalformedRow(line_no, f"row ts {cells[0]} off the grid")
        for j, cell in enumerate(cells[1:]):
            if cell != "":
                values[i, j] = _parse_value(cell, line_no)
                present[i, j] = True
    return TidyTable(grid, columns, values, present)
