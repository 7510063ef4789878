"""Command-line surface: one subcommand per pipeline stage plus `pipeline`.

    perfweave synth     --scenario clean --seed 7 --out DIR
    perfweave ingest    --config cfg.json --out DIR
    perfweave merge     --config cfg.json --samples F --out DIR [--step S]
    perfweave impute    --config cfg.json --table F --out DIR
    perfweave transform --config cfg.json --table F --out DIR
    perfweave correlate --config cfg.json --table F --out DIR [--max-lag N --top-k N]
    perfweave quality   --config cfg.json --table F --samples F --out DIR
    perfweave pipeline  --config cfg.json --out DIR [--plots]

Exit status: 2 on configuration/usage errors (message names the offending
field), 1 when a quality verdict is "fail" (quality and pipeline only),
0 otherwise. Identical inputs and configuration produce byte-identical
non-image outputs; `pipeline` writes every stage's artifact plus the
effective configuration and a run summary.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import correlate as correlate_mod
from . import quality as quality_mod
from . import timealign
from .config import PipelineConfig, effective_json, load_config
from .errors import ConfigError, PerfweaveError, PlotUnavailable
from .impute import impute_table, mask_to_text
from .ingest import PARSERS, MetricSample, samples_from_text, samples_to_text
from .synth import SCENARIOS, Scenario, gen_scenario
from .transform import transform_table

NS = 10**9


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _write_json(path: Path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --- stages (shared by `pipeline` and the individual subcommands) ---------------


def stage_ingest(cfg: PipelineConfig) -> list[MetricSample]:
    if not cfg.inputs:
        raise ConfigError("config field 'inputs': at least one input is required")
    samples: list[MetricSample] = []
    for spec in cfg.inputs:
        try:
            text = Path(spec.path).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError(f"config field 'inputs': file not found: {spec.path}") from None
        parser = PARSERS[spec.format]
        kwargs = {"source_id": spec.label}
        if spec.format != "gc" and spec.interval_ns:
            kwargs["interval_ns"] = spec.interval_ns
        samples.extend(parser(text, spec.clock, spec.host_id, **kwargs))
    return samples


def stage_merge(samples: list[MetricSample], cfg: PipelineConfig):
    adjusted = timealign.adjust_semantics(
        samples, mid_stamped_at_end=frozenset(cfg.mid_stamped_at_end))
    grid = timealign.build_grid(adjusted, cfg.grid_step_ns)
    snapped = timealign.snap_to_grid(adjusted, grid, cfg.snap_tolerance_ns)
    return timealign.merge(snapped), snapped.diagnostics


def stage_impute(table, cfg: PipelineConfig):
    return impute_table(table, cfg.impute_policies, steady_globs=cfg.steady_state_globs)


def stage_transform(table, cfg: PipelineConfig):
    return transform_table(table, cfg.transform_specs)


def stage_correlate(table, cfg: PipelineConfig, *, with_curves: bool = False):
    return correlate_mod.nominate(
        table, cfg.max_lag, cfg.top_k, cfg.min_abs_r,
        min_overlap=cfg.min_overlap, pairwise=cfg.pairwise, with_curves=with_curves,
    )


def stage_quality(table, samples, cfg: PipelineConfig):
    return quality_mod.assess(table, samples, cfg.quality)


# --- artifact writers --------------------------------------------------------------


def _write_samples(out: Path, samples):
    _write_text(out / "samples.txt", samples_to_text(samples))


def _write_merged(out: Path, table):
    _write_text(out / "merged.wide.txt", timealign.to_wide_text(table))
    _write_text(out / "merged.long.txt", timealign.to_long_text(table))


def _write_imputed(out: Path, result):
    _write_text(out / "imputed.wide.txt", timealign.to_wide_text(result.table))
    _write_text(out / "imputed.mask.txt", mask_to_text(result.table, result.imputed))


def _write_transformed(out: Path, result):
    _write_text(out / "transformed.wide.txt", timealign.to_wide_text(result.table))
    _write_json(out / "transformed.fitted.json",
                {"fitted": result.fitted, "applied": result.applied})


def _write_nominations(out: Path, report):
    _write_text(out / "nominations.txt", correlate_mod.report_to_text(report))
    _write_json(out / "nominations.json", correlate_mod.report_to_json_obj(report))


def _write_quality(out: Path, report):
    _write_json(out / "quality.json", quality_mod.report_to_json_obj(report))
    _write_text(out / "quality.txt", quality_mod.report_to_text(report))


def _write_scenario(scn: Scenario, out: Path) -> list[str]:
    written = []
    for name in sorted(scn.files):
        _write_text(out / name, scn.files[name])
        written.append(name)
    _write_json(out / "config.json", scn.config)
    _write_json(out / "manifest.json", scn.manifest)
    return written + ["config.json", "manifest.json"]


# --- subcommands ----------------------------------------------------------------------


def _cmd_synth(args) -> int:
    scn = gen_scenario(args.scenario, args.seed, lag_steps=args.lag_steps)
    out = Path(args.out)
    written = _write_scenario(scn, out)
    print(f"scenario {scn.name} (seed {scn.seed}) -> {out}: {', '.join(written)}")
    return 0


def _cmd_ingest(args) -> int:
    cfg = _load(args)
    samples = stage_ingest(cfg)
    out = Path(args.out)
    _write_samples(out, samples)
    print(f"ingested {len(samples)} samples from {len(cfg.inputs)} file(s) -> {out / 'samples.txt'}")
    return 0


def _read_samples_arg(args) -> list[MetricSample]:
    samples = []
    for path in args.samples:
        samples.extend(samples_from_text(Path(path).read_text(encoding="utf-8")))
    return samples


def _cmd_merge(args) -> int:
    cfg = _load(args)
    samples = _read_samples_arg(args)
    table, diagnostics = stage_merge(samples, cfg)
    out = Path(args.out)
    _write_merged(out, table)
    print(f"merged {table.n_cols} columns x {table.n_points} grid points "
          f"({len(diagnostics)} snap warnings) -> {out / 'merged.wide.txt'}")
    return 0


def _cmd_impute(args) -> int:
    cfg = _load(args)
    table = timealign.from_wide_text(Path(args.table).read_text(encoding="utf-8"))
    result = stage_impute(table, cfg)
    out = Path(args.out)
    _write_imputed(out, result)
    filled = int(result.imputed.sum())
    print(f"imputed {filled} cells -> {out / 'imputed.wide.txt'}")
    return 0


def _cmd_transform(args) -> int:
    cfg = _load(args)
    table = timealign.from_wide_text(Path(args.table).read_text(encoding="utf-8"))
    result = stage_transform(table, cfg)
    out = Path(args.out)
    _write_transformed(out, result)
    print(f"transformed {len(result.applied)} column(s) -> {out / 'transformed.wide.txt'}")
    return 0


def _cmd_correlate(args) -> int:
    cfg = _load(args)
    table = timealign.from_wide_text(Path(args.table).read_text(encoding="utf-8"))
    report = stage_correlate(table, cfg, with_curves=args.curves)
    out = Path(args.out)
    _write_nominations(out, report)
    print(f"nominated {len(report.results)} pair(s), skipped {len(report.skipped)} "
          f"-> {out / 'nominations.txt'}")
    return 0


def _cmd_quality(args) -> int:
    cfg = _load(args)
    table = None
    if args.table:
        table = timealign.from_wide_text(Path(args.table).read_text(encoding="utf-8"))
    samples = _read_samples_arg(args) if args.samples else None
    report = stage_quality(table, samples, cfg)
    out = Path(args.out)
    _write_quality(out, report)
    print(quality_mod.report_to_text(report), end="")
    return 1 if report.verdict == "fail" else 0


def _cmd_pipeline(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    _write_json(out / "config_effective.json", effective_json(cfg))

    samples = stage_ingest(cfg)
    _write_samples(out, samples)
    merged, diagnostics = stage_merge(samples, cfg)
    _write_merged(out, merged)
    imputed = stage_impute(merged, cfg)
    _write_imputed(out, imputed)
    transformed = stage_transform(imputed.table, cfg)
    _write_transformed(out, transformed)
    nominations = stage_correlate(transformed.table, cfg)
    _write_nominations(out, nominations)
    # Models need untransformed values and completeness needs pre-impute
    # missingness, so quality reads the merged table plus the raw samples.
    report = stage_quality(merged, samples, cfg)
    _write_quality(out, report)

    summary = {
        "kernel": correlate_mod.kernel_name(),
        "n_samples": len(samples),
        "n_sources": len(cfg.inputs),
        "grid": {"start_ns": merged.grid.start_ns, "step_ns": merged.grid.step_ns,
                 "n_points": merged.grid.n_points},
        "n_columns": merged.n_cols,
        "snap_warnings": len(diagnostics),
        "imputed_fraction": imputed.imputed_fraction,
        "top_nominations": [
            {"metric_a": c.metric_a, "metric_b": c.metric_b,
             "best_lag": c.best_lag, "r": c.r_at_best}
            for c in nominations.results[:5]
        ],
        "quality": {"verdict": report.verdict, "summary": report.summary},
    }
    _write_json(out / "summary.json", summary)

    if args.plots or cfg.plots:
        try:
            from .plots import emit_plots

            written = emit_plots(transformed.table, nominations, out / "plots",
                                 cfg.plot_metrics)
            if not (nominations.results):
                print("heatmap skipped: empty nomination list")
            print(f"plots: {', '.join(str(p) for p in written)}")
        except PlotUnavailable as exc:
            print(f"warning: plots unavailable ({exc})", file=sys.stderr)

    print(f"pipeline -> {out} (quality {report.verdict}, "
          f"{len(nominations.results)} nominations)")
    return 1 if report.verdict == "fail" else 0


def _load(args) -> PipelineConfig:
    if not args.config:
        raise ConfigError("config field '--config': a config file is required")
    cfg = load_config(args.config)
    if getattr(args, "step", None):
        cfg.grid_step_ns = round(args.step * NS)
        cfg.snap_tolerance_ns = None
    if getattr(args, "max_lag", None) is not None:
        cfg.max_lag = args.max_lag
    if getattr(args, "top_k", None) is not None:
        cfg.top_k = args.top_k
    return cfg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perfweave",
        description="Harmonize telemetry logs into a tidy table, repair it, "
                    "and mine it for lagged correlations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, table=False, samples=False):
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--out", default="out", help="output directory")
        if table:
            p.add_argument("--table", help="wide-format table file from a previous stage")
        if samples:
            p.add_argument("--samples", nargs="*", default=[],
                           help="samples.txt file(s) from the ingest stage")

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("--scenario", choices=SCENARIOS, default="clean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lag-steps", type=int, default=5, dest="lag_steps")
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="parse input logs into canonical samples")
    common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("merge", help="adjust semantics, grid, and merge samples")
    common(p, samples=True)
    p.add_argument("--step", type=float, help="grid step in seconds (overrides config)")
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("impute", help="repair MISSING cells per metric class")
    common(p, table=True)
    p.set_defaults(func=_cmd_impute)

    p = sub.add_parser("transform", help="apply scale transforms")
    common(p, table=True)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("correlate", help="rank lagged metric-pair correlations")
    common(p, table=True)
    p.add_argument("--max-lag", type=int, dest="max_lag")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--curves", action="store_true", help="include per-lag curves in JSON")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("quality", help="two-layer quality assessment")
    common(p, table=True, samples=True)
    p.set_defaults(func=_cmd_quality)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    common(p)
    p.add_argument("--step", type=float, help="grid step in seconds (overrides config)")
    p.add_argument("--max-lag", type=int, dest="max_lag")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--plots", action="store_true", help="emit SVG charts")
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PerfweaveError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
