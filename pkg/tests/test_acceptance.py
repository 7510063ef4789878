"""Acceptance suite: one test per criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as the
criteria execute. Every tolerance is pinned here, not calibrated later.
"""

import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from perfweave.cli import main, stage_ingest, stage_merge
from perfweave.config import load_config
from perfweave.correlate import best_lag, ccf, nominate
from perfweave.impute import ImputationPolicy, impute_series, impute_table
from perfweave.ingest import (
    ClockSpec,
    MetricSample,
    format_timestamp,
    normalize_timestamp,
    parse_gc,
    parse_sar,
    PARSERS,
)
from perfweave.quality import QualityConfig, check_models
from perfweave.synth import SignalSpec, emit_format, gen_signal, lagged_copy
from perfweave.timealign import (
    Column,
    Series,
    TidyTable,
    TimeGrid,
    adjust_semantics,
    build_grid,
    merge,
    snap_to_grid,
)

from oracles import oracle_nominate

NS = 10**9


def report(criterion: str, ok: bool = True):
    print(f"[acceptance] {criterion}: {'PASS' if ok else 'FAIL'}", flush=True)
    assert ok


# --- 1. round-trip fidelity ---------------------------------------------------------


def _random_sample_set(fmt: str, rng) -> tuple[list[MetricSample], ClockSpec]:
    n_ts = int(rng.integers(3, 12))
    step_s = int(rng.integers(1, 30))
    start_s = int(rng.integers(1, 2_000_000_000 // 30))
    ts = [(start_s + i * step_s) * NS for i in range(n_ts)]
    clock = rng.choice([
        ClockSpec("epoch", unit="s"),
        ClockSpec("epoch", unit="ms"),
        ClockSpec("epoch", unit="us"),
        ClockSpec("epoch", unit="ns"),
        ClockSpec("wall-clock", tz_offset_minutes=int(rng.integers(-840, 841))),
    ])
    host = f"host{int(rng.integers(0, 5))}"
    samples = []
    if fmt == "sar":
        for metric in ("cpu.user_pct", "io.tps"):
            for t in ts:
                samples.append(MetricSample(
                    "sar", host, f"sar.{metric}", t, float(rng.normal(50, 20)),
                    "percent", "interval-average", step_s * NS))
    elif fmt == "perf":
        for event in ("cache-misses", "instructions"):
            for t in ts:
                samples.append(MetricSample(
                    "perf", host, f"perf.{event}", t, float(rng.integers(0, 10**9)),
                    "count", "interval-average", step_s * NS))
    elif fmt == "gc":
        for t in ts:
            before = float(rng.uniform(300, 2000))
            for name, unit, value in (("gc.pause_ms", "ms", float(rng.uniform(0, 100))),
                                      ("gc.heap_before_mb", "MB", before),
                                      ("gc.heap_after_mb", "MB", before * 0.5)):
                samples.append(MetricSample("gc", host, name, t, value, unit, "event", 0))
    else:
        for t in ts:
            x = float(rng.uniform(1, 500))
            r = float(rng.uniform(0.01, 3))
            for name, unit, value in (("ux.throughput_ops_s", "ops/s", x),
                                      ("ux.resp_time_s", "s", r),
                                      ("ux.concurrency", "count", x * r)):
                samples.append(MetricSample("loadgen", host, name, t, value, unit,
                                            "interval-average", step_s * NS))
    return samples, clock


def test_c1_round_trip_fidelity():
    rng = np.random.default_rng(1001)
    t0 = time.monotonic()
    key = lambda s: (s.metric_name, s.ts)
    for fmt in sorted(PARSERS):
        for _ in range(100):
            samples, clock = _random_sample_set(fmt, rng)
            back = PARSERS[fmt](emit_format(samples, fmt, clock), clock,
                                samples[0].host_id, source_id=samples[0].source_id)
            want = sorted(samples, key=key)
            got = sorted(back, key=key)
            assert len(got) == len(want)
            for w, g in zip(want, got):
                assert g.ts == w.ts  # exact
                assert g.value == pytest.approx(w.value, rel=1e-9)
                assert (g.metric_name, g.unit, g.semantics, g.interval_ns) == \
                       (w.metric_name, w.unit, w.semantics, w.interval_ns)
    elapsed = time.monotonic() - t0
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    report("C1 round-trip fidelity (400 sample sets, < 10 s)")


# --- 2. clock unification ------------------------------------------------------------


def test_c2_clock_unification():
    instants_s = [0, 10, 1_622_505_600, 4_000_000_000]
    variants = [
        ClockSpec("epoch", unit="s"),
        ClockSpec("epoch", unit="ms"),
        ClockSpec("epoch", unit="ns"),
        ClockSpec("wall-clock", tz_offset_minutes=0),
        ClockSpec("wall-clock", tz_offset_minutes=60),
        ClockSpec("wall-clock", tz_offset_minutes=-330),
    ]
    for secs in instants_s:
        want = secs * NS
        got = {normalize_timestamp(format_timestamp(want, clock), clock)
               for clock in variants}
        assert got == {want}  # exact equality across all six encodings
    report("C2 clock unification (6 encodings, exact)")


# --- 3. semantics alignment -----------------------------------------------------------


def test_c3_semantics_alignment():
    period, amplitude, base, interval = 60.0, 10.0, 50.0, 10  # steps of 1 s
    omega = 2.0 * math.pi / period

    def truth(t: float) -> float:
        return base + amplitude * math.sin(omega * t)

    def window_average(t_end: float) -> float:
        # continuous mean of truth over (t_end - interval, t_end]
        lo, hi = t_end - interval, t_end
        return base + amplitude * (math.cos(omega * lo) - math.cos(omega * hi)) / (
            omega * interval)

    stamps = list(range(10, 310, interval))
    samples = []
    for t in stamps:
        samples.append(MetricSample("toolA", "h", "a.sig", t * NS, window_average(t),
                                    "u", "interval-average", interval * NS))
        samples.append(MetricSample("toolB", "h", "b.sig", t * NS, truth(t),
                                    "u", "instant-at-end", interval * NS))
        samples.append(MetricSample("toolC", "h", "c.sig", t * NS, truth(t - 5),
                                    "u", "instant-mid", interval * NS))
    adjusted = adjust_semantics(samples, mid_stamped_at_end={"toolC"})
    grid = build_grid(adjusted, NS)
    table = merge(snap_to_grid(adjusted, grid, 0))
    worst = 0.0
    for metric in ("a.sig", "b.sig", "c.sig"):
        series = table.series(f"h:{metric}")
        pts = grid.points()
        assert series.n_present == len(stamps)
        for i in np.flatnonzero(series.present):
            expected = truth(pts[i] / NS)
            rel = abs(series.values[i] - expected) / abs(expected)
            worst = max(worst, rel)
    assert worst <= 0.05, f"worst relative error {worst:.4f}"
    report(f"C3 semantics alignment (3 tool streams, worst rel err {worst:.4%} <= 5%)")


# --- 4. imputation exactness -----------------------------------------------------------


def test_c4_imputation_exactness():
    rng = np.random.default_rng(44)
    # (a) linear interpolation reconstructs a line exactly
    t = np.arange(200, dtype=float)
    line = 0.37 * t + 5.0
    present = np.ones(200, dtype=bool)
    present[rng.choice(np.arange(1, 199), size=80, replace=False)] = False
    out, _ = impute_series(Series(np.where(present, line, 0.0), present),
                           ImputationPolicy("linear-interpolation"))
    np.testing.assert_allclose(out.values, line, rtol=1e-9, atol=0)

    # (b) zero-fill hits exactly the non-event grid points of a merged GC column
    sar = parse_sar("\n".join(f"{ts};cpu.user_pct;50;percent"
                              for ts in range(15, 116, 10)),
                    ClockSpec("epoch", unit="s"), "h")
    gc = parse_gc("20;5.5;900;300\n70;7.5;800;200\n", ClockSpec("epoch", unit="s"), "h")
    table = merge(snap_to_grid(adjust_semantics(sar + gc), TimeGrid(0, 10 * NS, 12), 0))
    raw = table.series("h:gc.pause_ms")
    filled = impute_table(table).table.series("h:gc.pause_ms")
    event_points = set(np.flatnonzero(raw.present).tolist())
    assert event_points == {2, 7}
    for i in range(12):
        assert filled.values[i] == (raw.values[i] if i in event_points else 0.0)

    # (c) mean/median of originally-present cells preserved to 1e-9
    values = rng.normal(100, 15, size=301)
    present = rng.random(301) > 0.35
    present[[0, -1]] = True
    src = Series(np.where(present, values, 0.0), present)
    for method, stat in (("mean", np.mean), ("median", np.median)):
        out, _ = impute_series(src, ImputationPolicy(method))
        assert stat(out.values) == pytest.approx(stat(values[present]), rel=1e-9)
    report("C4 imputation exactness (line 1e-9, GC zero points, mean/median 1e-9)")


# --- 5. lag recovery --------------------------------------------------------------------


def test_c5_lag_recovery():
    t0 = time.monotonic()
    for k, seed in [(0, 50), (1, 51), (3, 52), (10, 53), (20, 54)]:
        x = gen_signal(SignalSpec("ar1", n=1000, seed=seed, phi=0.8, sigma=1.0))
        y = lagged_copy(x, k, 0.1 * float(np.std(x)), seed=seed + 100)
        lag, r = best_lag(x, y, 25)
        assert lag == k, f"planted {k}, recovered {lag}"
        assert r >= 0.9, f"planted {k}: r={r:.3f}"
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0, f"took {elapsed:.1f}s"
    report("C5 lag recovery (k in {0,1,3,10,20}, exact, r >= 0.9, < 5 s)")


# --- 6. oracle equivalence ----------------------------------------------------------------


def test_c6_oracle_equivalence():
    for seed in range(20):
        rng = np.random.default_rng(7000 + seed)
        m = int(rng.integers(3, 11))
        n = int(rng.integers(50, 201))
        cols = sorted((Column("h", f"m{i:02d}") for i in range(m)), key=lambda c: c.key)
        values = np.empty((n, m))
        present = np.ones((n, m), dtype=bool)
        for j in range(m):
            base = rng.standard_normal(n)
            if j >= 2 and rng.random() < 0.5:
                base = np.roll(values[:, j - 2], int(rng.integers(0, 6))) + 0.3 * base
            values[:, j] = base
            if rng.random() < 0.4:
                present[rng.random(n) < 0.1, j] = False
        values[~present] = 0.0
        table = TidyTable(TimeGrid(0, NS, n), cols, values, present)
        got = nominate(table, max_lag=8, top_k=1000, min_abs_r=0.0, pairwise=True)
        want = oracle_nominate(table, max_lag=8)
        assert len(got.results) == len(want)
        for res, (a, b, lag, r, n_eff) in zip(got.results, want):
            assert (res.metric_a, res.metric_b) == (a, b)
            assert res.best_lag == lag
            assert res.r_at_best == pytest.approx(r, abs=1e-9)
            assert res.n_effective == n_eff
    report("C6 oracle equivalence (20 tables vs brute force, r within 1e-9)")


# --- 7. affine invariance --------------------------------------------------------------------


def test_c7_affine_invariance():
    for seed in range(50):
        rng = np.random.default_rng(9000 + seed)
        n = 120
        x = rng.standard_normal(n).cumsum()
        y = np.roll(x, int(rng.integers(0, 4))) + rng.standard_normal(n)
        z = rng.standard_normal(n)
        a = float(rng.uniform(1e-3, 1e3))
        b = float(rng.uniform(-1e6, 1e6))
        base_curve = ccf(x, y, 10)
        scaled_curve = ccf(a * x + b, y, 10)
        for (_, r1), (_, r2) in zip(base_curve, scaled_curve):
            assert abs(r1 - r2) <= 1e-9
        cols = [Column("h", "x"), Column("h", "y"), Column("h", "z")]
        ones = np.ones((n, 3), dtype=bool)
        t1 = TidyTable(TimeGrid(0, NS, n), cols, np.column_stack([x, y, z]), ones)
        t2 = TidyTable(TimeGrid(0, NS, n), cols,
                       np.column_stack([a * x + b, y, z]), ones.copy())
        r1 = nominate(t1, max_lag=10, top_k=10, min_abs_r=0.0)
        r2 = nominate(t2, max_lag=10, top_k=10, min_abs_r=0.0)
        assert [(c.metric_a, c.metric_b, c.best_lag) for c in r1.results] == \
               [(c.metric_a, c.metric_b, c.best_lag) for c in r2.results]
    report("C7 affine invariance (50 seeded pairs, 1e-9, ranks stable)")


# --- 8. quality model --------------------------------------------------------------------------


def _run_quality(tmp_path: Path, scenario_name: str, seed: int):
    scn_dir = tmp_path / scenario_name
    assert main(["synth", "--scenario", scenario_name, "--seed", str(seed),
                 "--out", str(scn_dir)]) == 0
    cfg = load_config(scn_dir / "config.json")
    samples = stage_ingest(cfg)
    merged, _ = stage_merge(samples, cfg)
    from perfweave.quality import assess

    manifest = json.loads((scn_dir / "manifest.json").read_text())
    return assess(merged, samples, cfg.quality), manifest


def test_c8_quality_model(tmp_path):
    clean, clean_manifest = _run_quality(tmp_path, "clean", 88)
    assert clean.verdict == "pass" == clean_manifest["expected_quality_verdict"]
    assert clean.summary["fail"] == 0

    faulty, manifest = _run_quality(tmp_path, "faulty", 89)
    assert faulty.verdict == "fail"
    flagged = sorted((f.check_id, f.subject) for f in faulty.findings
                     if f.severity == "fail")
    wanted = sorted((v["check_id"], v["subject"])
                    for v in manifest["planted_violations"])
    assert flagged == wanted and len(flagged) == len(manifest["planted_violations"])

    def littles(concurrency):
        cols = [Column("h", "ux.concurrency"), Column("h", "ux.resp_time_s"),
                Column("h", "ux.throughput_ops_s")]
        values = np.array([[concurrency, 0.5, 100.0]] * 2)
        table = TidyTable(TimeGrid(0, NS, 2), cols, values, np.ones((2, 3), dtype=bool))
        (f,) = [f for f in check_models(table, QualityConfig())
                if f.check_id == "model.littles_law"]
        return f

    assert littles(50.0).severity == "info"  # X*R = 50 = N, exact identity
    assert littles(500.0).severity == "fail"
    report("C8 quality model (clean pass, faulty = manifest, Little's law cases)")


# --- 9. desk-scale throughput ---------------------------------------------------------------------


def test_c9_desk_scale_throughput():
    rng = np.random.default_rng(77)
    m, n = 1000, 1000
    values = rng.standard_normal((n, m))
    cols = sorted((Column("h", f"m{i:04d}") for i in range(m)), key=lambda c: c.key)
    table = TidyTable(TimeGrid(0, NS, n), cols, values, np.ones((n, m), dtype=bool))
    t0 = time.monotonic()
    result = nominate(table, max_lag=30, top_k=50, min_abs_r=0.0)
    elapsed = time.monotonic() - t0
    assert len(result.results) == 50
    assert elapsed < 300.0, f"took {elapsed:.0f}s"
    report(f"C9 desk-scale nominate (1000x1000, max_lag 30, {elapsed:.0f}s < 300 s)")


# --- 10. end-to-end determinism ----------------------------------------------------------------------


def test_c10_end_to_end_determinism(tmp_path):
    scn = tmp_path / "scn"
    assert main(["synth", "--scenario", "planted-lag", "--seed", "99",
                 "--out", str(scn)]) == 0
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["pipeline", "--config", str(scn / "config.json"),
                     "--out", str(out)]) == 0
        digests.append({
            p.relative_to(out).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(out.rglob("*")) if p.is_file() and p.suffix != ".svg"
        })
    assert digests[0] == digests[1]

    manifest = json.loads((scn / "manifest.json").read_text())
    want = manifest["planted_lag_pairs"][0]
    top = Path(tmp_path / "a" / "nominations.txt").read_text().splitlines()
    first = next(l for l in top if not l.startswith("#")).split(";")
    assert first[0] == want["metric_a"]
    assert first[1] == want["metric_b"]
    assert int(first[2]) == want["lag_steps"]
    report("C10 end-to-end determinism (byte-identical, planted pair on top)")
