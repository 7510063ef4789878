"""Deterministic synthetic telemetry: signals, faults, and full scenarios.

Everything here is a pure function of (spec, seed); re-running any
generator reproduces byte-identical output. Randomness comes from numpy's
PCG64 stream seeded through SeedSequence, and scenario manifests record
every planted artifact (lagged pair, injected violation, expected quality
verdict), so downstream stages can be checked against ground truth.

Scenario layout: report timestamps are stamped at interval end offset so
that the midpoint attribution of interval-average sources lands exactly
on the analysis grid; GC events sit on grid points directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadLag, BadPattern, BadSpec, SchemaMismatch, UnknownScenario
from .ingest import (
    GC_FIELDS,
    LOADGEN_FIELDS,
    SEM_EVENT,
    SEM_INTERVAL_AVG,
    ClockSpec,
    MetricSample,
    format_timestamp,
    _modal_gap,
)

NS = 10**9


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _child_seeds(seed: int, count: int) -> list[int]:
    """Deterministic 64-bit sub-seeds for independent streams."""
    return [int(c.generate_state(1, np.uint64)[0])
            for c in np.random.SeedSequence(seed).spawn(count)]


# --- signals --------------------------------------------------------------------


@dataclass(frozen=True)
class SignalSpec:
    """One of: ar1(phi, sigma), sine(period_steps, amplitude, phase),
    step(change_at, low, high), constant(value)."""

    kind: str
    n: int
    seed: int = 0
    phi: float = 0.0
    sigma: float = 1.0
    period_steps: float = 0.0
    amplitude: float = 1.0
    phase: float = 0.0
    change_at: int = 0
    low: float = 0.0
    high: float = 1.0
    value: float = 0.0


def gen_signal(spec: SignalSpec) -> np.ndarray:
    """Deterministic series from a SignalSpec; raises BadSpec off-domain."""
    if spec.n < 2:
        raise BadSpec(f"n must be >= 2, got {spec.n}")
    if spec.kind == "ar1":
        if not abs(spec.phi) < 1:
            raise BadSpec(f"ar1 needs |phi| < 1, got {spec.phi}")
        if spec.sigma < 0:
            raise BadSpec("ar1 sigma must be non-negative")
        eps = _rng(spec.seed).standard_normal(spec.n) * spec.sigma
        x = np.empty(spec.n)
        x[0] = eps[0]
        for t in range(1, spec.n):
            x[t] = spec.phi * x[t - 1] + eps[t]
        return x
    if spec.kind == "sine":
        if spec.period_steps <= 0:
            raise BadSpec("sine needs period_steps > 0")
        t = np.arange(spec.n)
        return spec.amplitude * np.sin(2.0 * math.pi * t / spec.period_steps + spec.phase)
    if spec.kind == "step":
        if not 0 <= spec.change_at <= spec.n:
            raise BadSpec(f"change_at {spec.change_at} outside [0, n]")
        x = np.full(spec.n, spec.low)
        x[spec.change_at:] = spec.high
        return x
    if spec.kind == "constant":
        return np.full(spec.n, spec.value)
    raise BadSpec(f"unknown signal kind {spec.kind!r}")


def lagged_copy(x: np.ndarray, lag_steps: int, noise_sigma: float, seed: int) -> np.ndarray:
    """y_t = x_{t-lag} + noise; head cells continue the noise around mean(x)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 0 <= lag_steps < n:
        raise BadLag(f"lag_steps {lag_steps} outside [0, {n})")
    eps = _rng(seed).standard_normal(n) * noise_sigma
    y = np.empty(n)
    y[:lag_steps] = float(np.mean(x)) + eps[:lag_steps]
    y[lag_steps:] = x[: n - lag_steps] + eps[lag_steps:]
    return y


@dataclass(frozen=True)
class MissingPattern:
    """random(rate) or block(start, length)."""

    kind: str
    rate: float = 0.0
    start: int = 0
    length: int = 0


def inject_missing(values: np.ndarray, pattern: MissingPattern, seed: int):
    """Return (values, present) with a deterministic missingness mask.

    random: exactly round(rate * n) cells go MISSING; block: cells
    [start, start+length).
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    present = np.ones(n, dtype=bool)
    if pattern.kind == "random":
        if not 0 <= pattern.rate < 1:
            raise BadPattern(f"rate {pattern.rate} outside [0, 1)")
        count = round(pattern.rate * n)
        if count:
            idx = _rng(seed).choice(n, size=count, replace=False)
            present[idx] = False
    elif pattern.kind == "block":
        if pattern.start < 0 or pattern.length < 0 or pattern.start + pattern.length > n:
            raise BadPattern(
                f"block [{pattern.start}, {pattern.start + pattern.length}) outside [0, {n})"
            )
        present[pattern.start:pattern.start + pattern.length] = False
    else:
        raise BadPattern(f"unknown pattern kind {pattern.kind!r}")
    out = values.copy()
    out[~present] = 0.0
    return out, present


# --- format emission ---------------------------------------------------------------


def _require(cond: bool, message: str):
    if not cond:
        raise SchemaMismatch(message)


def _uniform(samples: list[MetricSample], attr: str) -> str:
    values = {getattr(s, attr) for s in samples}
    _require(len(values) == 1, f"samples span several {attr} values: {sorted(values)}")
    return values.pop()


def _check_intervals(samples: list[MetricSample]):
    """Non-event metrics must have interval_ns recoverable by the parser."""
    ts_by_metric: dict[str, list[int]] = {}
    for s in samples:
        _require(s.semantics == SEM_INTERVAL_AVG,
                 f"{s.metric_name}: expected interval-average semantics")
        ts_by_metric.setdefault(s.metric_name, []).append(s.ts)
    intervals = {s.metric_name: s.interval_ns for s in samples}
    for metric, ts in ts_by_metric.items():
        _require(len({s.interval_ns for s in samples if s.metric_name == metric}) == 1,
                 f"{metric}: inconsistent interval_ns")
        gap = _modal_gap(ts)
        _require(gap is not None,
                 f"{metric}: needs two distinct timestamps so the parser can "
                 "recover the interval")
        _require(gap == intervals[metric],
                 f"{metric}: interval_ns {intervals[metric]} != modal gap {gap}")


def _emit_sar(samples: list[MetricSample], clock: ClockSpec) -> list[str]:
    _check_intervals(samples)
    rows = []
    for s in samples:
        _require(s.metric_name.startswith("sar."), f"{s.metric_name}: not a sar.* metric")
        rows.append((s.ts, s.metric_name[4:], s.value, s.unit))
    return [
        f"{format_timestamp(ts, clock)};{name};{value!r};{unit}"
        for ts, name, value, unit in sorted(rows, key=lambda r: (r[0], r[1]))
    ]


def _emit_perf(samples: list[MetricSample], clock: ClockSpec) -> list[str]:
    _check_intervals(samples)
    rows = []
    seen = set()
    for s in samples:
        _require(s.metric_name.startswith("perf."), f"{s.metric_name}: not a perf.* metric")
        _require(s.unit == "count", f"{s.metric_name}: perf unit must be 'count'")
        key = (s.ts, s.metric_name)
        _require(key not in seen, f"duplicate (ts, event) {key}")
        seen.add(key)
        rows.append((s.ts, s.metric_name[5:], s.value))
    return [
        f"{format_timestamp(ts, clock)};{name};{value!r}"
        for ts, name, value in sorted(rows, key=lambda r: (r[0], r[1]))
    ]


def _group_trio(samples: list[MetricSample], fields, semantics: str) -> dict[int, dict[str, float]]:
    names = [name for name, _ in fields]
    units = dict(fields)
    by_ts: dict[int, dict[str, float]] = {}
    for s in samples:
        _require(s.metric_name in names, f"{s.metric_name}: not one of {names}")
        _require(s.unit == units[s.metric_name],
                 f"{s.metric_name}: unit {s.unit!r} != {units[s.metric_name]!r}")
        _require(s.semantics == semantics,
                 f"{s.metric_name}: expected {semantics} semantics")
        row = by_ts.setdefault(s.ts, {})
        _require(s.metric_name not in row, f"duplicate {s.metric_name} at ts {s.ts}")
        row[s.metric_name] = s.value
    for ts, row in by_ts.items():
        _require(len(row) == len(names), f"ts {ts}: incomplete record {sorted(row)}")
    return by_ts


def _emit_gc(samples: list[MetricSample], clock: ClockSpec) -> list[str]:
    by_ts = _group_trio(samples, GC_FIELDS, SEM_EVENT)
    return [
        ";".join([format_timestamp(ts, clock)]
                 + [repr(by_ts[ts][name]) for name, _ in GC_FIELDS])
        for ts in sorted(by_ts)
    ]


def _emit_loadgen(samples: list[MetricSample], clock: ClockSpec) -> list[str]:
    by_ts = _group_trio(samples, LOADGEN_FIELDS, SEM_INTERVAL_AVG)
    _check_intervals(samples)
    return [
        ";".join([format_timestamp(ts, clock)]
                 + [repr(by_ts[ts][name]) for name, _ in LOADGEN_FIELDS])
        for ts in sorted(by_ts)
    ]


_EMITTERS = {"sar": _emit_sar, "perf": _emit_perf, "gc": _emit_gc, "loadgen": _emit_loadgen}

_FORMAT_HEADERS = {
    "sar": "# ts;metric;value;unit",
    "perf": "# ts;event;value",
    "gc": "# ts;pause_ms;heap_before_mb;heap_after_mb",
    "loadgen": "# ts;throughput_ops_s;resp_time_s;concurrency",
}


def emit_format(samples: list[MetricSample], format: str, clock: ClockSpec) -> str:
    """Render samples in one of the four export formats, exactly invertible.

    The matching parser maps the text back to the input samples (compared
    as sets; emission sorts rows by timestamp). Samples that do not fit
    the format's schema, or whose interval the parser could not re-infer,
    raise SchemaMismatch.
    """
    if format not in _EMITTERS:
        raise SchemaMismatch(f"unknown format {format!r}")
    lines = [_FORMAT_HEADERS[format]]
    if samples:
        _uniform(samples, "host_id")
        _uniform(samples, "source_id")
        lines.extend(_EMITTERS[format](samples, clock))
    return "\n".join(lines) + "\n"


# --- scenarios ----------------------------------------------------------------------

BASE_TS_S = 1_622_505_600  # 2021-06-01 00:00:00 UTC
REPORT_STEP_S = 10
N_REPORTS = 360

SCENARIOS = ("clean", "planted-lag", "noisy-neighbor", "faulty")


@dataclass
class Scenario:
    name: str
    seed: int
    files: dict[str, str]  # filename -> text
    manifest: dict
    config: dict


def _round(a: np.ndarray, digits: int) -> np.ndarray:
    return np.round(a, digits)


def _ar1(seed, phi, n=N_REPORTS) -> np.ndarray:
    return gen_signal(SignalSpec("ar1", n=n, seed=seed, phi=phi, sigma=1.0))


def _host_streams(seeds: list[int], *, n=N_REPORTS):
    """The per-host clean recipe; returns named arrays (CPU sums to 100)."""
    user = _round(np.clip(38.0 + 6.0 * _ar1(seeds[0], 0.9, n), 5.0, 65.0), 3)
    system = _round(np.clip(16.0 + 5.0 * _ar1(seeds[1], 0.7, n), 3.0, 30.0), 3)
    idle = _round(100.0 - user - system, 3)
    net = _round(np.clip(1.0e6 * (1.0 + 0.3 * _ar1(seeds[2], 0.8, n)), 1.0e4, None), 1)
    x = _round(np.clip(100.0 + 15.0 * _ar1(seeds[3], 0.8, n), 30.0, None), 4)
    r = _round(np.clip(0.5 + 0.08 * _ar1(seeds[4], 0.8, n), 0.1, 2.0), 4)
    conc = x * r  # Little's law holds exactly
    instr = _round(np.clip(2.0e9 * (1.0 + 0.2 * _ar1(seeds[5], 0.8, n)), 1.0e8, None), 0)
    cache = _round(np.clip(4.0e7 + 8.0e6 * _ar1(seeds[6], 0.85, n), 1.0e6, None), 0)
    return {"user": user, "system": system, "idle": idle, "net": net,
            "x": x, "r": r, "conc": conc, "instr": instr, "cache": cache}


def _gc_events(seeds, *, n=N_REPORTS):
    rng = _rng(seeds[0])
    sel = rng.random(n) < 0.3
    if sel.sum() < 2:
        sel[:2] = True
    pause = _round(20.0 + 15.0 * np.abs(_ar1(seeds[1], 0.6, n)), 3)
    before = _round(np.clip(900.0 + 120.0 * _ar1(seeds[2], 0.7, n), 300.0, None), 1)
    after = _round(before * (0.2 + 0.25 * rng.random(n)), 1)
    return sel, pause, before, after


def _report_ts_ns(n=N_REPORTS) -> np.ndarray:
    """Interval-end stamps chosen so midpoints land on the analysis grid."""
    half = REPORT_STEP_S * NS // 2
    return BASE_TS_S * NS + REPORT_STEP_S * NS * np.arange(n, dtype=np.int64) + half


def _grid_ts_ns(n=N_REPORTS) -> np.ndarray:
    return BASE_TS_S * NS + REPORT_STEP_S * NS * np.arange(n, dtype=np.int64)


def _interval_samples(source, host, metric, unit, ts_ns, values) -> list[MetricSample]:
    step = REPORT_STEP_S * NS
    return [
        MetricSample(source, host, metric, int(t), float(v), unit, SEM_INTERVAL_AVG, step)
        for t, v in zip(ts_ns, values)
    ]


CLOCKS = {
    "sar": ClockSpec("epoch", unit="s"),
    "perf": ClockSpec("epoch", unit="ms"),
    "gc": ClockSpec("epoch", unit="us"),
    "loadgen": ClockSpec("wall-clock", tz_offset_minutes=120),
}


def _clock_json(clock: ClockSpec) -> dict:
    if clock.kind == "epoch":
        return {"kind": "epoch", "unit": clock.unit}
    return {"kind": "wall-clock", "tz_offset_minutes": clock.tz_offset_minutes,
            "datetime_pattern": clock.datetime_pattern}


def _host_files(host: str, streams, gc, *, with_perf=True, with_loadgen=True,
                with_gc=True, cache_values=None, suffix=""):
    """Emit the export files for one host; returns {filename: text} and inputs."""
    ts = _report_ts_ns()
    files = {}
    inputs = []

    sar_samples = []
    for metric, unit, values in (
        ("sar.cpu.user_pct", "percent", streams["user"]),
        ("sar.cpu.system_pct", "percent", streams["system"]),
        ("sar.cpu.idle_pct", "percent", streams["idle"]),
        ("sar.net.rx_kB_s", "kB/s", streams["net"]),
    ):
        sar_samples.extend(_interval_samples("sar", host, metric, unit, ts, values))
    name = f"sar{suffix}.txt"
    files[name] = emit_format(sar_samples, "sar", CLOCKS["sar"])
    inputs.append({"path": name, "format": "sar", "host_id": host,
                   "clock": _clock_json(CLOCKS["sar"])})

    if with_perf:
        perf_samples = []
        cache = streams["cache"] if cache_values is None else cache_values
        for metric, values in (("perf.cache-misses", cache),
                               ("perf.instructions", streams["instr"])):
            perf_samples.extend(_interval_samples("perf", host, metric, "count", ts, values))
        name = f"perf{suffix}.txt"
        files[name] = emit_format(perf_samples, "perf", CLOCKS["perf"])
        inputs.append({"path": name, "format": "perf", "host_id": host,
                       "clock": _clock_json(CLOCKS["perf"])})

    if with_gc:
        sel, pause, before, after = gc
        gts = _grid_ts_ns()[sel]
        gc_samples = []
        for t, p, b, a in zip(gts, pause[sel], before[sel], after[sel]):
            for (metric, unit), v in zip(GC_FIELDS, (p, b, a)):
                gc_samples.append(
                    MetricSample("gc", host, metric, int(t), float(v), unit, SEM_EVENT, 0)
                )
        name = f"gc{suffix}.txt"
        files[name] = emit_format(gc_samples, "gc", CLOCKS["gc"])
        inputs.append({"path": name, "format": "gc", "host_id": host,
                       "clock": _clock_json(CLOCKS["gc"])})

    if with_loadgen:
        lg_samples = []
        for (metric, unit), values in zip(LOADGEN_FIELDS,
                                          (streams["x"], streams["r"], streams["conc"])):
            lg_samples.extend(_interval_samples("loadgen", host, metric, unit, ts, values))
        name = f"loadgen{suffix}.txt"
        files[name] = emit_format(lg_samples, "loadgen", CLOCKS["loadgen"])
        inputs.append({"path": name, "format": "loadgen", "host_id": host,
                       "clock": _clock_json(CLOCKS["loadgen"])})

    return files, inputs


def _base_config(inputs: list[dict]) -> dict:
    return {
        "inputs": inputs,
        "grid": {"step_s": REPORT_STEP_S},
        "impute": {"policies": {}},
        "transform": {"specs": {"*": {"method": "zscore"}}},
        "correlate": {"max_lag": 30, "top_k": 20, "min_abs_r": 0.5},
        "quality": {},
        "plots": {"metrics": ["*cpu.user_pct", "*cache-misses", "*throughput*"]},
    }


def gen_scenario(name: str, seed: int, *, lag_steps: int = 5) -> Scenario:
    """Build a named scenario: files, pipeline config, and a ground-truth manifest.

    clean          consistent multi-source dataset; quality verdict pass.
    planted-lag    clean plus one metric pair coupled at a known lag.
    noisy-neighbor victim throughput negatively coupled to an aggressor's
                   cache misses at a known lag (victim = base - g * agg_{t-k} + noise).
    faulty         clean plus injected range and CPU-decomposition violations.
    """
    if name not in SCENARIOS:
        raise UnknownScenario(f"{name!r}; pick one of {', '.join(SCENARIOS)}")
    seeds = _child_seeds(seed, 24)

    manifest: dict = {
        "scenario": name,
        "seed": seed,
        "base_ts_ns": BASE_TS_S * NS,
        "report_step_s": REPORT_STEP_S,
        "n_reports": N_REPORTS,
        "lag_convention": "positive lag means metric_b trails metric_a",
        "planted_lag_pairs": [],
        "planted_violations": [],
        "expected_quality_verdict": "pass",
    }

    if name == "noisy-neighbor":
        victim, aggressor = "lc-app", "batch"
        v_streams = _host_streams(seeds[0:7])
        a_streams = _host_streams(seeds[7:14])
        agg_sig = _ar1(seeds[14], 0.85)
        cache = _round(np.clip(4.0e7 + 8.0e6 * agg_sig, 1.0e6, None), 0)
        coupled = lagged_copy(agg_sig, lag_steps, 0.08 * float(np.std(agg_sig)), seeds[15])
        x = _round(np.clip(120.0 - 9.0 * coupled, 20.0, None), 4)
        v_streams["x"] = x
        v_streams["conc"] = x * v_streams["r"]
        gc = _gc_events(seeds[16:19])
        files, inputs = _host_files(victim, v_streams, gc, with_perf=False,
                                    suffix=f"_{victim}")
        a_files, a_inputs = _host_files(aggressor, a_streams, None, with_gc=False,
                                        with_loadgen=False, cache_values=cache,
                                        suffix=f"_{aggressor}")
        files.update(a_files)
        inputs.extend(a_inputs)
        manifest["planted_lag_pairs"] = [{
            "metric_a": f"{aggressor}:perf.cache-misses",
            "metric_b": f"{victim}:ux.throughput_ops_s",
            "lag_steps": lag_steps,
            "sign": -1,
        }]
    else:
        host = "app1"
        streams = _host_streams(seeds[0:7])
        gc = _gc_events(seeds[7:10])
        cache = None
        if name == "planted-lag":
            coupled = lagged_copy(streams["user"], lag_steps,
                                  0.05 * float(np.std(streams["user"])), seeds[10])
            cache = _round(4.0e7 + 5.0e5 * coupled, 0)
            manifest["planted_lag_pairs"] = [{
                "metric_a": f"{host}:perf.cache-misses",
                "metric_b": f"{host}:sar.cpu.user_pct",
                "lag_steps": -lag_steps,
                "sign": 1,
            }]
        if name == "faulty":
            streams["user"] = streams["user"].copy()
            streams["system"] = streams["system"].copy()
            streams["user"][50] = 105.0
            streams["system"][120] = streams["system"][120] + 8.0
            manifest["planted_violations"] = [
                {"check_id": "correctness.range", "subject": f"{host}:sar.cpu.user_pct"},
                {"check_id": "model.cpu_decomposition", "subject": host},
            ]
            manifest["expected_quality_verdict"] = "fail"
        files, inputs = _host_files(host, streams, gc, cache_values=cache)

    config = _base_config(inputs)
    manifest["files"] = inputs
    manifest["config_path"] = "config.json"
    return Scenario(name, seed, files, manifest, config)
