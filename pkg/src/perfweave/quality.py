"""Two-layer data-quality assessment: correctness checks, then model checks.

Layer one runs basic queries over the raw samples and the merged table:
timestamp monotonicity, duplicate keys, per-metric value ranges, unit
consistency, sampling regularity, and column completeness. Layer two runs
an ensemble of cross-metric performance models, each a consistency
relation the data must satisfy:

  * Little's law: concurrency ~ throughput x response time,
  * CPU decomposition: component percentages sum to 100,
  * activity consistency: zero throughput implies a near-idle CPU.

Quality problems are data facts, not exceptions: every check emits
findings, and the report's verdict is "pass" exactly when no finding has
severity "fail". Model checks always yield one finding each (info when
they pass or their inputs are absent); correctness checks emit findings
only for violations. Every quantitative fail carries the measured value
and the threshold it broke, so reports are self-auditing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fnmatch import fnmatchcase

import numpy as np

from .ingest import SEM_EVENT, MetricSample
from .timealign import TidyTable

SEV_INFO = "info"
SEV_WARN = "warn"
SEV_FAIL = "fail"


@dataclass(frozen=True)
class QualityFinding:
    check_id: str
    severity: str
    subject: str
    detail: str
    measured: float | None = None
    threshold: float | None = None


@dataclass
class QualityReport:
    findings: list[QualityFinding]

    @property
    def summary(self) -> dict[str, int]:
        counts = {SEV_INFO: 0, SEV_WARN: 0, SEV_FAIL: 0}
        for f in self.findings:
            counts[f.severity] += 1
        return counts

    @property
    def verdict(self) -> str:
        return "fail" if any(f.severity == SEV_FAIL for f in self.findings) else "pass"


@dataclass
class QualityConfig:
    """Thresholds and metric globs; every default is echoed into findings."""

    range_bounds: list[tuple[str, float, float]] = field(
        default_factory=lambda: [("*cpu.*_pct", 0.0, 100.0)]
    )
    completeness_warn_fraction: float = 0.5
    regularity_cv_warn: float = 0.2
    littles_law_tolerance: float = 0.10
    cpu_decomposition_tolerance_pct: float = 2.0
    idle_busy_max_pct: float = 10.0
    cpu_component_glob: str = "*cpu.*_pct"
    cpu_idle_glob: str = "*cpu.idle_pct"
    throughput_metric: str = "ux.throughput_ops_s"
    resp_time_metric: str = "ux.resp_time_s"
    concurrency_metric: str = "ux.concurrency"
    enable_models: bool = True


# --- layer 1: correctness checks -------------------------------------------------


def check_correctness(
    table: TidyTable | None,
    samples: list[MetricSample] | None,
    config: QualityConfig,
) -> list[QualityFinding]:
    """Basic correctness queries; findings only where something is off."""
    findings: list[QualityFinding] = []
    samples = samples or []

    if samples:
        _check_monotonic(samples, findings)
        _check_duplicates(samples, findings)
        _check_units(samples, findings)
        _check_regularity(samples, config, findings)
        _check_range_samples(samples, config, findings)
    elif table is not None and table.n_cols:
        _check_range_table(table, config, findings)

    if table is not None and table.n_cols:
        _check_completeness(table, config, findings)

    findings.sort(key=lambda f: (f.check_id, f.subject))
    return findings


def _check_monotonic(samples, findings):
    last: dict[tuple[str, str], int] = {}
    flagged: set[tuple[str, str]] = set()
    for s in samples:
        key = (s.source_id, s.host_id)
        if key in last and s.ts < last[key] and key not in flagged:
            flagged.add(key)
            findings.append(QualityFinding(
                "correctness.monotonic_ts", SEV_FAIL, f"{key[0]}@{key[1]}",
                f"timestamps go backwards ({s.ts} after {last[key]})",
            ))
        last[key] = max(s.ts, last.get(key, s.ts))


def _check_duplicates(samples, findings):
    seen: dict[tuple, int] = {}
    for s in samples:
        key = (s.source_id, s.host_id, s.metric_name, s.ts)
        seen[key] = seen.get(key, 0) + 1
    offenders: dict[str, int] = {}
    for (src, host, metric, _ts), count in seen.items():
        if count > 1:
            cid = f"{host}:{metric}"
            offenders[cid] = offenders.get(cid, 0) + count - 1
    for cid in sorted(offenders):
        findings.append(QualityFinding(
            "correctness.duplicate_key", SEV_FAIL, cid,
            f"{offenders[cid]} duplicate (source, host, metric, ts) observations",
            measured=float(offenders[cid]), threshold=0.0,
        ))


def _check_units(samples, findings):
    units: dict[str, set[str]] = {}
    for s in samples:
        units.setdefault(s.metric_name, set()).add(s.unit)
    for metric in sorted(units):
        if len(units[metric]) > 1:
            findings.append(QualityFinding(
                "correctness.unit_consistency", SEV_FAIL, metric,
                f"metric reported in several units: {sorted(units[metric])}",
            ))


def _check_regularity(samples, config, findings):
    ts_by_key: dict[tuple[str, str, str], list[int]] = {}
    for s in samples:
        if s.semantics != SEM_EVENT:  # events are irregular by nature
            ts_by_key.setdefault((s.source_id, s.host_id, s.metric_name), []).append(s.ts)
    for key in sorted(ts_by_key):
        uniq = np.array(sorted(set(ts_by_key[key])), dtype=np.float64)
        if len(uniq) < 3:
            continue
        gaps = np.diff(uniq)
        cv = float(np.std(gaps) / np.mean(gaps))
        if cv > config.regularity_cv_warn:
            findings.append(QualityFinding(
                "correctness.sampling_regularity", SEV_WARN, f"{key[1]}:{key[2]}",
                f"gap coefficient of variation {cv:.3f} exceeds "
                f"{config.regularity_cv_warn}",
                measured=cv, threshold=config.regularity_cv_warn,
            ))


def _bounds_for(metric: str, config) -> tuple[float, float] | None:
    for glob, lo, hi in config.range_bounds:
        if fnmatchcase(metric, glob):
            return lo, hi
    return None


def _check_range_samples(samples, config, findings):
    worst: dict[str, tuple[int, float, float, float]] = {}
    for s in samples:
        bounds = _bounds_for(s.metric_name, config)
        if bounds is None:
            continue
        lo, hi = bounds
        if not lo <= s.value <= hi:
            cid = f"{s.host_id}:{s.metric_name}"
            count, value, _, _ = worst.get(cid, (0, s.value, lo, hi))
            if abs(s.value - np.clip(s.value, lo, hi)) >= abs(value - np.clip(value, lo, hi)):
                value = s.value
            worst[cid] = (count + 1, value, lo, hi)
    for cid in sorted(worst):
        count, value, lo, hi = worst[cid]
        findings.append(QualityFinding(
            "correctness.range", SEV_FAIL, cid,
            f"{count} value(s) outside [{lo}, {hi}]; worst {value}",
            measured=value, threshold=hi if value > hi else lo,
        ))


def _check_range_table(table, config, findings):
    for j, col in enumerate(table.columns):
        bounds = _bounds_for(col.metric_name, config)
        if bounds is None:
            continue
        lo, hi = bounds
        vals = table.values[table.present[:, j], j]
        bad = vals[(vals < lo) | (vals > hi)]
        if bad.size:
            worst = bad[np.argmax(np.abs(bad - np.clip(bad, lo, hi)))]
            findings.append(QualityFinding(
                "correctness.range", SEV_FAIL, col.cid,
                f"{bad.size} value(s) outside [{lo}, {hi}]; worst {worst}",
                measured=float(worst), threshold=hi if worst > hi else lo,
            ))


def _check_completeness(table, config, findings):
    for j, col in enumerate(table.columns):
        fraction = 1.0 - float(table.present[:, j].sum()) / table.n_points
        if fraction > config.completeness_warn_fraction:
            findings.append(QualityFinding(
                "correctness.completeness", SEV_WARN, col.cid,
                f"{fraction:.0%} of grid points MISSING",
                measured=fraction, threshold=config.completeness_warn_fraction,
            ))


# --- layer 2: performance-model checks --------------------------------------------


def check_models(table: TidyTable | None, config: QualityConfig) -> list[QualityFinding]:
    """Cross-metric consistency models; one finding per model, always."""
    findings = [
        _model_littles_law(table, config),
        _model_cpu_decomposition(table, config),
        _model_activity(table, config),
    ]
    findings.sort(key=lambda f: (f.check_id, f.subject))
    return findings


def _hosts_with(table: TidyTable, metric: str) -> dict[str, int]:
    return {c.host_id: j for j, c in enumerate(table.columns) if c.metric_name == metric}


def _skip(check_id: str, detail: str) -> QualityFinding:
    return QualityFinding(check_id, SEV_INFO, "-", f"skipped: {detail}")


def _model_littles_law(table, config) -> QualityFinding:
    check_id = "model.littles_law"
    if table is None or not table.n_cols:
        return _skip(check_id, "no table")
    xs = _hosts_with(table, config.throughput_metric)
    rs = _hosts_with(table, config.resp_time_metric)
    ns = _hosts_with(table, config.concurrency_metric)
    hosts = sorted(set(xs) & set(rs) & set(ns))
    if not hosts:
        return _skip(check_id, "throughput/resp_time/concurrency columns absent")
    worst = 0.0
    evaluated = 0
    for host in hosts:
        jx, jr, jn = xs[host], rs[host], ns[host]
        ok = table.present[:, jx] & table.present[:, jr] & table.present[:, jn]
        if not ok.any():
            continue
        x = table.values[ok, jx]
        r = table.values[ok, jr]
        n = table.values[ok, jn]
        predicted = x * r
        err = np.abs(n - predicted) / np.maximum(predicted, 1.0)
        worst = max(worst, float(err.max()))
        evaluated += int(ok.sum())
    if not evaluated:
        return _skip(check_id, "no grid points with all three metrics present")
    tol = config.littles_law_tolerance
    if worst > tol:
        return QualityFinding(
            check_id, SEV_FAIL, ",".join(hosts),
            f"concurrency deviates from throughput x resp_time by {worst:.3g} "
            f"(relative, worst point)",
            measured=worst, threshold=tol,
        )
    return QualityFinding(check_id, SEV_INFO, ",".join(hosts),
                          f"pass over {evaluated} points", measured=worst, threshold=tol)


def _model_cpu_decomposition(table, config) -> QualityFinding:
    check_id = "model.cpu_decomposition"
    if table is None or not table.n_cols:
        return _skip(check_id, "no table")
    by_host: dict[str, list[int]] = {}
    for j, col in enumerate(table.columns):
        if fnmatchcase(col.metric_name, config.cpu_component_glob):
            by_host.setdefault(col.host_id, []).append(j)
    hosts = sorted(h for h, js in by_host.items() if len(js) >= 2)
    if not hosts:
        return _skip(check_id, f"no host has >= 2 columns matching {config.cpu_component_glob}")
    worst = 0.0
    evaluated = 0
    for host in hosts:
        js = by_host[host]
        ok = np.logical_and.reduce([table.present[:, j] for j in js])
        if not ok.any():
            continue
        total = np.sum([table.values[ok, j] for j in js], axis=0)
        dev = np.abs(total - 100.0)
        worst = max(worst, float(dev.max()))
        evaluated += int(ok.sum())
    if not evaluated:
        return _skip(check_id, "no grid points with all components present")
    tol = config.cpu_decomposition_tolerance_pct
    if worst > tol:
        return QualityFinding(
            check_id, SEV_FAIL, ",".join(hosts),
            f"CPU component percentages sum to 100 +/- {worst:.3g} at the worst point",
            measured=worst, threshold=tol,
        )
    return QualityFinding(check_id, SEV_INFO, ",".join(hosts),
                          f"pass over {evaluated} points", measured=worst, threshold=tol)


def _model_activity(table, config) -> QualityFinding:
    check_id = "model.activity_consistency"
    if table is None or not table.n_cols:
        return _skip(check_id, "no table")
    xs = _hosts_with(table, config.throughput_metric)
    idles = {
        c.host_id: j for j, c in enumerate(table.columns)
        if fnmatchcase(c.metric_name, config.cpu_idle_glob)
    }
    hosts = sorted(set(xs) & set(idles))
    if not hosts:
        return _skip(check_id, "need throughput and cpu idle columns on one host")
    worst = None
    for host in hosts:
        jx, ji = xs[host], idles[host]
        ok = table.present[:, jx] & table.present[:, ji] & (table.values[:, jx] == 0.0)
        if not ok.any():
            continue
        busy = 100.0 - table.values[ok, ji]
        worst = max(worst or 0.0, float(busy.max()))
    tol = config.idle_busy_max_pct
    if worst is None:
        return QualityFinding(check_id, SEV_INFO, ",".join(hosts),
                              "pass (no zero-throughput points)", threshold=tol)
    if worst > tol:
        return QualityFinding(
            check_id, SEV_FAIL, ",".join(hosts),
            f"CPU busy {worst:.3g}% while throughput is zero",
            measured=worst, threshold=tol,
        )
    return QualityFinding(check_id, SEV_INFO, ",".join(hosts),
                          "pass at zero-throughput points", measured=worst, threshold=tol)


# --- assembly -------------------------------------------------------------------


def assess(
    table: TidyTable | None,
    samples: list[MetricSample] | None,
    config: QualityConfig | None = None,
) -> QualityReport:
    """Run both layers and fold the findings into one deterministic report."""
    config = config or QualityConfig()
    no_table = table is None or not table.n_cols
    if no_table and not samples:
        return QualityReport([QualityFinding("meta.no_data", SEV_INFO, "-", "no data")])
    findings = check_correctness(table, samples, config)
    if config.enable_models:
        findings = findings + check_models(table, config)
    findings.sort(key=lambda f: (f.check_id, f.subject))
    return QualityReport(findings)


def report_to_json_obj(report: QualityReport) -> dict:
    return {
        "verdict": report.verdict,
        "summary": report.summary,
        "findings": [
            {
                "check_id": f.check_id,
                "severity": f.severity,
                "subject": f.subject,
                "detail": f.detail,
                "measured": f.measured,
                "threshold": f.threshold,
            }
            for f in report.findings
        ],
    }


def report_to_text(report: QualityReport) -> str:
    lines = [f"verdict: {report.verdict}"]
    counts = report.summary
    lines.append(f"findings: {counts['fail']} fail, {counts['warn']} warn, {counts['info']} info")
    for f in report.findings:
        quant = ""
        if f.measured is not None and f.threshold is not None:
            quant = f" [measured {f.measured!r}, threshold {f.threshold!r}]"
        lines.append(f"  {f.severity.upper():5s} {f.check_id} ({f.subject}): {f.detail}{quant}")
    return "\n".join(lines) + "\n"
