"""Parsers that turn telemetry exports into canonical metric samples.

Four plain-text export formats are supported. All of them are UTF-8, one
record per line, `;`-delimited; blank lines and lines starting with `#`
are ignored:

    sar      ts;metric;value;unit                      -> sar.<metric>
    perf     ts;event;value                            -> perf.<event>
    gc       ts;pause_ms;heap_before_mb;heap_after_mb  -> gc.*
    loadgen  ts;throughput_ops_s;resp_time_s;concurrency -> ux.*

Timestamps are canonicalized to integer nanoseconds since the Unix epoch
(UTC). The per-file clock is described by a :class:`ClockSpec`: either an
epoch count in one of four units, or a wall-clock string with a fixed UTC
offset. Two encodings of the same physical instant always map to the same
canonical value.

sar/perf/loadgen values are averages over a reporting interval; the
interval is inferred as the modal gap between consecutive timestamps of
the same metric (override with ``interval_ns=`` when the export is too
short to infer from). GC rows are point events with no interval.
"""

from __future__ import annotations

import math
from calendar import timegm
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta

from .errors import (
    CannotInferInterval,
    DuplicateSample,
    InvalidSample,
    MalformedRow,
    NegativeEpoch,
    NegativePause,
    NegativeThroughput,
    NonNumericValue,
    UnparseableTimestamp,
)

# Reporting semantics: what one reported number denotes.
SEM_INTERVAL_AVG = "interval-average"
SEM_INSTANT_END = "instant-at-end"
SEM_INSTANT_MID = "instant-mid"
SEM_EVENT = "event"
SEMANTICS = frozenset({SEM_INTERVAL_AVG, SEM_INSTANT_END, SEM_INSTANT_MID, SEM_EVENT})

NS_PER_UNIT = {"s": 10**9, "ms": 10**6, "us": 10**3, "ns": 1}

DEFAULT_WALL_PATTERN = "%Y-%m-%d %H:%M:%S"

_EPOCH = datetime(1970, 1, 1)


@dataclass(frozen=True)
class ClockSpec:
    """How a file encodes time.

    kind "epoch": numeric count since the Unix epoch in `unit`.
    kind "wall-clock": `datetime_pattern` string at a fixed UTC offset of
    `tz_offset_minutes` (range +/-14 h).
    """

    kind: str
    unit: str = "ns"
    tz_offset_minutes: int = 0
    datetime_pattern: str = DEFAULT_WALL_PATTERN

    def __post_init__(self):
        if self.kind not in ("epoch", "wall-clock"):
            raise InvalidSample(f"unknown clock kind {self.kind!r}")
        if self.kind == "epoch" and self.unit not in NS_PER_UNIT:
            raise InvalidSample(f"unknown epoch unit {self.unit!r}")
        if not -840 <= self.tz_offset_minutes <= 840:
            raise InvalidSample(
                f"tz_offset_minutes {self.tz_offset_minutes} outside [-840, 840]"
            )


@dataclass(frozen=True)
class MetricSample:
    """One observation of one metric from one source.

    `ts` is integer nanoseconds since the Unix epoch, UTC. `interval_ns`
    is the reporting interval; it is 0 exactly for event semantics.
    """

    source_id: str
    host_id: str
    metric_name: str
    ts: int
    value: float
    unit: str
    semantics: str
    interval_ns: int

    def __post_init__(self):
        if self.ts < 0:
            raise InvalidSample(f"negative ts {self.ts}")
        if not math.isfinite(self.value):
            raise InvalidSample(f"non-finite value for {self.metric_name}")
        if not self.metric_name or any(c.isspace() for c in self.metric_name):
            raise InvalidSample(f"bad metric name {self.metric_name!r}")
        if self.semantics not in SEMANTICS:
            raise InvalidSample(f"unknown semantics {self.semantics!r}")
        if (self.semantics == SEM_EVENT) != (self.interval_ns == 0):
            raise InvalidSample(
                f"{self.metric_name}: semantics {self.semantics!r} inconsistent "
                f"with interval_ns={self.interval_ns}"
            )
        if self.interval_ns < 0:
            raise InvalidSample(f"negative interval_ns {self.interval_ns}")


# --- timestamp canonicalization ------------------------------------------------


def _decimal_text_to_ns(text: str, mult: int) -> int:
    """Exact integer nanoseconds from a decimal string times `mult`."""
    s = text.strip()
    sign = 1
    if s[:1] in ("+", "-"):
        sign = -1 if s[0] == "-" else 1
        s = s[1:]
    whole, _, frac = s.partition(".")
    if not (whole or frac) or (whole and not whole.isdigit()) or (frac and not frac.isdigit()):
        raise UnparseableTimestamp(f"not a decimal number: {text!r}")
    ns = int(whole or "0") * mult
    if frac:
        scaled, rem = divmod(int(frac) * mult, 10 ** len(frac))
        if rem:
            raise UnparseableTimestamp(
                f"{text!r} has sub-nanosecond precision in this clock"
            )
        ns += scaled
    return sign * ns


def normalize_timestamp(raw, clock: ClockSpec) -> int:
    """Canonicalize `raw` under `clock` to ns since the Unix epoch, UTC.

    Raises UnparseableTimestamp when `raw` does not match the clock and
    NegativeEpoch for pre-1970 instants (in this domain those always mean
    a misconfigured unit).
    """
    if clock.kind == "epoch":
        mult = NS_PER_UNIT[clock.unit]
        if isinstance(raw, bool):
            raise UnparseableTimestamp(f"bad epoch value {raw!r}")
        if isinstance(raw, int):
            ns = raw * mult
        elif isinstance(raw, float):
            if not math.isfinite(raw):
                raise UnparseableTimestamp(f"non-finite epoch value {raw!r}")
            ns = round(raw * mult)
        elif isinstance(raw, str):
            ns = _decimal_text_to_ns(raw, mult)
        else:
            raise UnparseableTimestamp(f"unsupported raw timestamp type {type(raw).__name__}")
    else:
        if not isinstance(raw, str):
            raise UnparseableTimestamp("wall-clock timestamps must be text")
        try:
            dt = datetime.strptime(raw.strip(), clock.datetime_pattern)
        except ValueError as exc:
            raise UnparseableTimestamp(
                f"{raw!r} does not match pattern {clock.datetime_pattern!r}"
            ) from exc
        secs = timegm(dt.timetuple()) - clock.tz_offset_minutes * 60
        ns = secs * NS_PER_UNIT["s"] + dt.microsecond * 1000
    if ns < 0:
        raise NegativeEpoch(f"instant {raw!r} is before 1970-01-01 UTC")
    return ns


def format_timestamp(ts_ns: int, clock: ClockSpec) -> str:
    """Render a canonical ts in `clock`'s own encoding, exactly.

    Inverse of normalize_timestamp for every value it accepts; raises
    UnparseableTimestamp when the instant is not representable (e.g. a
    sub-second ts under a seconds-only wall pattern).
    """
    if clock.kind == "epoch":
        mult = NS_PER_UNIT[clock.unit]
        q, r = divmod(ts_ns, mult)
        if r == 0:
            return str(q)
        digits = len(str(mult)) - 1
        frac = str(r).rjust(digits, "0").rstrip("0")
        return f"{q}.{frac}"
    local_ns = ts_ns + clock.tz_offset_minutes * 60 * NS_PER_UNIT["s"]
    secs, rem = divmod(local_ns, NS_PER_UNIT["s"])
    micros, sub = divmod(rem, 1000)
    if sub or (micros and "%f" not in clock.datetime_pattern):
        raise UnparseableTimestamp(
            f"ts {ts_ns} not representable under pattern {clock.datetime_pattern!r}"
        )
    rendered = (_EPOCH + timedelta(seconds=int(secs), microseconds=int(micros))).strftime(
        clock.datetime_pattern
    )
    if normalize_timestamp(rendered, clock) != ts_ns:
        raise UnparseableTimestamp(
            f"pattern {clock.datetime_pattern!r} does not round-trip ts {ts_ns}"
        )
    return rendered


# --- shared row machinery ---------------------------------------------------


def _rows(text: str, n_fields: int):
    """Yield (line_no, fields) for each data line, enforcing the field count."""
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in stripped.split(";")]
        if len(fields) != n_fields:
            raise MalformedRow(
                line_no, f"expected {n_fields} ;-separated fields, got {len(fields)}"
            )
        yield line_no, fields


def _parse_value(field: str, line_no: int) -> float:
    try:
        v = float(field)
    except ValueError:
        raise NonNumericValue(line_no, f"value {field!r} is not a number") from None
    if not math.isfinite(v):
        raise NonNumericValue(line_no, f"value {field!r} is not finite")
    return v


def _parse_ts(field: str, clock: ClockSpec, line_no: int) -> int:
    try:
        return normalize_timestamp(field, clock)
    except UnparseableTimestamp as exc:
        raise UnparseableTimestamp(f"line {line_no}: {exc}") from None


def _modal_gap(ts_list: list[int]) -> int | None:
    """Most common gap between consecutive distinct timestamps; ties -> smallest."""
    uniq = sorted(set(ts_list))
    gaps = [b - a for a, b in zip(uniq, uniq[1:])]
    if not gaps:
        return None
    counts = Counter(gaps)
    top = max(counts.values())
    return min(g for g, c in counts.items() if c == top)


def _infer_intervals(
    ts_by_metric: dict[str, list[int]], override: int | None
) -> dict[str, int]:
    """Per-metric reporting interval: modal gap, file-wide fallback, or override."""
    if override is not None:
        if override <= 0:
            raise InvalidSample(f"interval_ns override must be positive, got {override}")
        return {m: override for m in ts_by_metric}
    per_metric = {m: _modal_gap(ts) for m, ts in ts_by_metric.items()}
    fallback = _modal_gap([t for ts in ts_by_metric.values() for t in ts])
    out = {}
    for m, gap in per_metric.items():
        gap = gap if gap is not None else fallback
        if gap is None:
            raise CannotInferInterval(
                f"metric {m!r}: need two distinct timestamps to infer the "
                "reporting interval, or pass interval_ns explicitly"
            )
        out[m] = gap
    return out


# --- the four parsers ----------------------------------------------------------


def parse_sar(
    text: str,
    clock: ClockSpec,
    host_id: str,
    *,
    source_id: str = "sar",
    interval_ns: int | None = None,
) -> list[MetricSample]:
    """Parse a sar export (`ts;metric;value;unit`) into interval-average samples.

    Metric names are namespaced `sar.<metric>`. One sample per data row;
    malformed rows raise with their line number, nothing is dropped.
    """
    parsed = []
    ts_by_metric: dict[str, list[int]] = {}
    for line_no, (f_ts, f_metric, f_value, f_unit) in _rows(text, 4):
        if not f_metric or any(c.isspace() for c in f_metric):
            raise MalformedRow(line_no, f"bad metric name {f_metric!r}")
        ts = _parse_ts(f_ts, clock, line_no)
        value = _parse_value(f_value, line_no)
        name = f"sar.{f_metric}"
        parsed.append((name, ts, value, f_unit))
        ts_by_metric.setdefault(name, []).append(ts)
    if not parsed:
        return []
    intervals = _infer_intervals(ts_by_metric, interval_ns)
    return [
        MetricSample(source_id, host_id, name, ts, value, unit,
                     SEM_INTERVAL_AVG, intervals[name])
        for name, ts, value, unit in parsed
    ]


def parse_perf(
    text: str,
    clock: ClockSpec,
    host_id: str,
    *,
    source_id: str = "perf",
    interval_ns: int | None = None,
) -> list[MetricSample]:
    """Parse a perf counter export (`ts;event;value`).

    Counter names are namespaced `perf.<event>`; the unit is implied
    "count". A repeated (ts, event) key raises DuplicateSample.
    """
    parsed = []
    seen: set[tuple[int, str]] = set()
    ts_by_metric: dict[str, list[int]] = {}
    for line_no, (f_ts, f_event, f_value) in _rows(text, 3):
        if not f_event or any(c.isspace() for c in f_event):
            raise MalformedRow(line_no, f"bad event name {f_event!r}")
        ts = _parse_ts(f_ts, clock, line_no)
        value = _parse_value(f_value, line_no)
        key = (ts, f_event)
        if key in seen:
            raise DuplicateSample(f"line {line_no}: duplicate (ts, event) {key!r}")
        seen.add(key)
        name = f"perf.{f_event}"
        parsed.append((name, ts, value))
        ts_by_metric.setdefault(name, []).append(ts)
    if not parsed:
        return []
    intervals = _infer_intervals(ts_by_metric, interval_ns)
    return [
        MetricSample(source_id, host_id, name, ts, value, "count",
                     SEM_INTERVAL_AVG, intervals[name])
        for name, ts, value in parsed
    ]


GC_FIELDS = (("gc.pause_ms", "ms"), ("gc.heap_before_mb", "MB"), ("gc.heap_after_mb", "MB"))


def parse_gc(
    text: str, clock: ClockSpec, host_id: str, *, source_id: str = "gc"
) -> list[MetricSample]:
    """Parse a GC event log (`ts;pause_ms;heap_before_mb;heap_after_mb`).

    Each row yields three event-semantics samples at the same ts,
    preserved verbatim (no gridding at ingest). Negative pauses raise.
    """
    samples = []
    for line_no, (f_ts, f_pause, f_before, f_after) in _rows(text, 4):
        ts = _parse_ts(f_ts, clock, line_no)
        pause = _parse_value(f_pause, line_no)
        if pause < 0:
            raise NegativePause(line_no, f"pause_ms {pause} is negative")
        values = (pause, _parse_value(f_before, line_no), _parse_value(f_after, line_no))
        for (name, unit), value in zip(GC_FIELDS, values):
            samples.append(
                MetricSample(source_id, host_id, name, ts, value, unit, SEM_EVENT, 0)
            )
    return samples


LOADGEN_FIELDS = (
    ("ux.throughput_ops_s", "ops/s"),
    ("ux.resp_time_s", "s"),
    ("ux.concurrency", "count"),
)


def parse_loadgen(
    text: str,
    clock: ClockSpec,
    host_id: str,
    *,
    source_id: str = "loadgen",
    interval_ns: int | None = None,
) -> list[MetricSample]:
    """Parse a load-generator log (`ts;throughput_ops_s;resp_time_s;concurrency`).

    Each row yields three interval-average samples. Negative throughput raises.
    """
    parsed = []
    ts_all: list[int] = []
    for line_no, (f_ts, f_x, f_r, f_n) in _rows(text, 4):
        ts = _parse_ts(f_ts, clock, line_no)
        x = _parse_value(f_x, line_no)
        if x < 0:
            raise NegativeThroughput(line_no, f"throughput {x} is negative")
        parsed.append((ts, (x, _parse_value(f_r, line_no), _parse_value(f_n, line_no))))
        ts_all.append(ts)
    if not parsed:
        return []
    intervals = _infer_intervals(
        {name: ts_all for name, _ in LOADGEN_FIELDS}, interval_ns
    )
    samples = []
    for ts, values in parsed:
        for (name, unit), value in zip(LOADGEN_FIELDS, values):
            samples.append(
                MetricSample(source_id, host_id, name, ts, value, unit,
                             SEM_INTERVAL_AVG, intervals[name])
            )
    return samples


PARSERS = {
    "sar": parse_sar,
    "perf": parse_perf,
    "gc": parse_gc,
    "loadgen": parse_loadgen,
}


# --- canonical sample dump (CLI intermediate) -----------------------------------

_SAMPLES_HEADER = "# perfweave samples v1: source;host;metric;ts_ns;value;unit;semantics;interval_ns"


def samples_to_text(samples: list[MetricSample]) -> str:
    """Serialize samples losslessly to the intermediate `;` format."""
    lines = [_SAMPLES_HEADER]
    for s in samples:
        lines.append(
            f"{s.source_id};{s.host_id};{s.metric_name};{s.ts};{s.value!r};"
            f"{s.unit};{s.semantics};{s.interval_ns}"
        )
    return "\n".join(lines) + "\n"


def samples_from_text(text: str) -> list[MetricSample]:
    """Inverse of samples_to_text."""
    samples = []
    for line_no, fields in _rows(text, 8):
        src, host, metric, ts, value, unit, sem, interval = fields
        samples.append(
            MetricSample(src, host, metric, int(ts), _parse_value(value, line_no),
                         unit, sem, int(interval))
        )
    return samples
