import json

import numpy as np
import pytest

from perfweave.correlate import best_lag
from perfweave.cli import stage_correlate, stage_impute, stage_ingest, stage_merge, stage_quality, stage_transform
from perfweave.errors import BadLag, BadPattern, BadSpec, SchemaMismatch, UnknownScenario
from perfweave.ingest import ClockSpec, parse_gc, parse_loadgen, parse_perf, parse_sar, PARSERS
from perfweave.synth import (
    MissingPattern,
    SignalSpec,
    emit_format,
    gen_scenario,
    gen_signal,
    inject_missing,
    lagged_copy,
)

NS = 10**9


class TestGenSignal:
    def test_constant(self):
        assert gen_signal(SignalSpec("constant", n=3, value=5.0)).tolist() == [5, 5, 5]

    def test_seed_determinism(self):
        spec = SignalSpec("ar1", n=100, seed=42, phi=0.7, sigma=1.0)
        assert np.array_equal(gen_signal(spec), gen_signal(spec))

    def test_different_seeds_differ(self):
        a = gen_signal(SignalSpec("ar1", n=100, seed=1, phi=0.7))
        b = gen_signal(SignalSpec("ar1", n=100, seed=2, phi=0.7))
        assert not np.array_equal(a, b)

    def test_explosive_phi_rejected(self):
        with pytest.raises(BadSpec):
            gen_signal(SignalSpec("ar1", n=10, phi=1.5))

    def test_sine_and_step(self):
        s = gen_signal(SignalSpec("sine", n=8, period_steps=8, amplitude=2.0))
        assert s[0] == pytest.approx(0.0) and s[2] == pytest.approx(2.0)
        st = gen_signal(SignalSpec("step", n=6, change_at=3, low=1.0, high=9.0))
        assert st.tolist() == [1, 1, 1, 9, 9, 9]

    def test_n_below_two_rejected(self):
        with pytest.raises(BadSpec):
            gen_signal(SignalSpec("constant", n=1, value=0.0))


class TestLaggedCopy:
    def test_zero_lag_zero_noise_is_identity(self):
        x = gen_signal(SignalSpec("ar1", n=50, seed=3, phi=0.5))
        assert np.array_equal(lagged_copy(x, 0, 0.0, seed=1), x)

    def test_lag_three_exact_tail(self):
        x = gen_signal(SignalSpec("ar1", n=50, seed=3, phi=0.5))
        y = lagged_copy(x, 3, 0.0, seed=1)
        assert np.array_equal(y[3:], x[:-3])
        assert np.all(y[:3] == np.mean(x))  # head continues around the mean

    def test_bad_lag(self):
        x = np.zeros(10)
        with pytest.raises(BadLag):
            lagged_copy(x, 10, 0.0, seed=1)
        with pytest.raises(BadLag):
            lagged_copy(x, -1, 0.0, seed=1)

    def test_recoverable_by_best_lag(self):
        x = gen_signal(SignalSpec("ar1", n=1000, seed=5, phi=0.8))
        y = lagged_copy(x, 3, 0.1 * float(np.std(x)), seed=6)
        lag, r = best_lag(x, y, 10)
        assert lag == 3 and r > 0.9


class TestInjectMissing:
    def test_rate_zero_unchanged(self):
        x = np.arange(10.0)
        out, present = inject_missing(x, MissingPattern("random", rate=0.0), seed=1)
        assert present.all() and np.array_equal(out, x)

    def test_block(self):
        x = np.arange(10.0)
        _, present = inject_missing(x, MissingPattern("block", start=2, length=3), seed=1)
        assert (~present).nonzero()[0].tolist() == [2, 3, 4]

    def test_random_half_is_exactly_half(self):
        x = np.arange(100.0)
        _, present = inject_missing(x, MissingPattern("random", rate=0.5), seed=9)
        assert int((~present).sum()) == 50

    def test_bounds_checked(self):
        with pytest.raises(BadPattern):
            inject_missing(np.arange(5.0), MissingPattern("block", start=3, length=4), 1)
        with pytest.raises(BadPattern):
            inject_missing(np.arange(5.0), MissingPattern("random", rate=1.0), 1)


CLOCKS = [
    ClockSpec("epoch", unit="s"),
    ClockSpec("epoch", unit="ms"),
    ClockSpec("epoch", unit="ns"),
    ClockSpec("wall-clock", tz_offset_minutes=-330),
]


def sort_key(s):
    return (s.metric_name, s.ts)


class TestEmitFormat:
    def sar_samples(self, host="h"):
        text = "1000;cpu.user_pct;42.5;percent\n1010;cpu.user_pct;43.25;percent\n" \
               "1000;mem.free_kb;12.0;kB\n1010;mem.free_kb;13.0;kB\n"
        return parse_sar(text, ClockSpec("epoch", unit="s"), host)

    @pytest.mark.parametrize("clock", CLOCKS)
    def test_sar_round_trip(self, clock):
        samples = self.sar_samples()
        text = emit_format(samples, "sar", clock)
        back = parse_sar(text, clock, "h")
        assert sorted(back, key=sort_key) == sorted(samples, key=sort_key)

    def test_loadgen_epoch_ms_round_trip(self):
        clock = ClockSpec("epoch", unit="ms")
        samples = parse_loadgen("1000;100.5;0.25;25.125\n1010;90.0;0.5;45.0\n",
                                ClockSpec("epoch", unit="s"), "h")
        text = emit_format(samples, "loadgen", clock)
        back = parse_loadgen(text, clock, "h")
        assert sorted(back, key=sort_key) == sorted(samples, key=sort_key)

    def test_gc_round_trip(self):
        samples = parse_gc("3;1.5;900.25;300.5\n17;2.5;800.0;200.0\n",
                           ClockSpec("epoch", unit="s"), "h")
        text = emit_format(samples, "gc", ClockSpec("epoch", unit="us"))
        back = parse_gc(text, ClockSpec("epoch", unit="us"), "h")
        assert sorted(back, key=sort_key) == sorted(samples, key=sort_key)

    def test_perf_round_trip(self):
        samples = parse_perf("5;cache-misses;42\n10;cache-misses;44\n",
                             ClockSpec("epoch", unit="s"), "h")
        text = emit_format(samples, "perf", ClockSpec("epoch", unit="ms"))
        back = parse_perf(text, ClockSpec("epoch", unit="ms"), "h")
        assert sorted(back, key=sort_key) == sorted(samples, key=sort_key)

    def test_empty_gives_comment_only_file(self):
        text = emit_format([], "sar", ClockSpec("epoch", unit="s"))
        assert all(line.startswith("#") for line in text.splitlines())
        assert parse_sar(text, ClockSpec("epoch", unit="s"), "h") == []

    def test_schema_mismatch_wrong_namespace(self):
        samples = self.sar_samples()
        with pytest.raises(SchemaMismatch):
            emit_format(samples, "perf", ClockSpec("epoch", unit="s"))

    def test_schema_mismatch_mixed_hosts(self):
        samples = self.sar_samples("h1") + self.sar_samples("h2")
        with pytest.raises(SchemaMismatch):
            emit_format(samples, "sar", ClockSpec("epoch", unit="s"))

    def test_unknown_format(self):
        with pytest.raises(SchemaMismatch):
            emit_format([], "csv", ClockSpec("epoch", unit="s"))


def run_scenario(scn, tmp_path):
    """Write scenario files, run the processing stages, return useful handles."""
    for name, text in scn.files.items():
        (tmp_path / name).write_text(text, encoding="utf-8")
    (tmp_path / "config.json").write_text(json.dumps(scn.config), encoding="utf-8")
    from perfweave.config import load_config

    cfg = load_config(tmp_path / "config.json")
    samples = stage_ingest(cfg)
    merged, _ = stage_merge(samples, cfg)
    imputed = stage_impute(merged, cfg)
    transformed = stage_transform(imputed.table, cfg)
    report = stage_correlate(transformed.table, cfg)
    quality = stage_quality(merged, samples, cfg)
    return samples, merged, report, quality


class TestScenarios:
    def test_determinism_byte_identical(self):
        a = gen_scenario("planted-lag", seed=123)
        b = gen_scenario("planted-lag", seed=123)
        assert a.files == b.files
        assert a.manifest == b.manifest

    def test_unknown_scenario(self):
        with pytest.raises(UnknownScenario):
            gen_scenario("chaos", seed=1)

    def test_clean_passes_quality(self, tmp_path):
        scn = gen_scenario("clean", seed=7)
        _, _, _, quality = run_scenario(scn, tmp_path)
        assert quality.verdict == scn.manifest["expected_quality_verdict"] == "pass"
        assert quality.summary["fail"] == 0

    def test_planted_lag_recovered_first(self, tmp_path):
        scn = gen_scenario("planted-lag", seed=21, lag_steps=5)
        _, _, report, quality = run_scenario(scn, tmp_path)
        assert quality.verdict == "pass"
        want = scn.manifest["planted_lag_pairs"][0]
        top = report.results[0]
        assert (top.metric_a, top.metric_b) == (want["metric_a"], want["metric_b"])
        assert top.best_lag == want["lag_steps"]

    def test_noisy_neighbor_negative_coupling_recovered(self, tmp_path):
        scn = gen_scenario("noisy-neighbor", seed=31, lag_steps=4)
        _, _, report, quality = run_scenario(scn, tmp_path)
        assert quality.verdict == "pass"
        want = scn.manifest["planted_lag_pairs"][0]
        hit = next(c for c in report.results
                   if (c.metric_a, c.metric_b) == (want["metric_a"], want["metric_b"]))
        assert hit.best_lag == want["lag_steps"]
        assert hit.r_at_best < -0.9  # negative coupling, as planted

    def test_faulty_fails_with_exactly_manifest_violations(self, tmp_path):
        scn = gen_scenario("faulty", seed=41)
        _, _, _, quality = run_scenario(scn, tmp_path)
        assert quality.verdict == "fail"
        flagged = [(f.check_id, f.subject) for f in quality.findings
                   if f.severity == "fail"]
        wanted = [(v["check_id"], v["subject"]) for v in scn.manifest["planted_violations"]]
        assert sorted(flagged) == sorted(wanted)

    def test_manifest_lists_every_file(self):
        scn = gen_scenario("noisy-neighbor", seed=2)
        assert {f["path"] for f in scn.manifest["files"]} == set(scn.files)
        assert {f["format"] for f in scn.manifest["files"]} <= set(PARSERS)
