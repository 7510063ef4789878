"""Pipeline configuration: one JSON file plus CLI-flag overrides.

The effective (merged) configuration is echoed into the output directory
on pipeline runs so results stay reproducible. Validation errors raise
ConfigError with the offending field named; the CLI maps those to exit
status 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .impute import ImputationPolicy
from .ingest import NS_PER_UNIT, PARSERS, ClockSpec
from .quality import QualityConfig
from .transform import TransformSpec

NS = 10**9


@dataclass
class InputSpec:
    path: str  # resolved, for reading
    label: str  # as written in the config; used as source_id
    format: str
    host_id: str
    clock: ClockSpec
    interval_ns: int | None = None


@dataclass
class PipelineConfig:
    inputs: list[InputSpec] = field(default_factory=list)
    grid_step_ns: int = 10 * NS
    snap_tolerance_ns: int | None = None  # None -> step / 4
    impute_policies: dict[str, ImputationPolicy] = field(default_factory=dict)
    steady_state_globs: tuple[str, ...] = ()
    transform_specs: dict[str, TransformSpec] = field(default_factory=dict)
    max_lag: int = 30
    top_k: int = 50
    min_abs_r: float = 0.5
    min_overlap: int = 8
    pairwise: bool = False
    quality: QualityConfig = field(default_factory=QualityConfig)
    plot_metrics: list[str] = field(default_factory=lambda: ["*"])
    plots: bool = False
    out_dir: str = "out"
    mid_stamped_at_end: tuple[str, ...] = ()


def _require(cond: bool, fieldname: str, detail: str):
    if not cond:
        raise ConfigError(f"config field {fieldname!r}: {detail}")


def _clock_from_json(obj: dict, fieldname: str) -> ClockSpec:
    _require(isinstance(obj, dict), fieldname, "clock must be an object")
    kind = obj.get("kind")
    _require(kind in ("epoch", "wall-clock"), f"{fieldname}.kind",
             "must be 'epoch' or 'wall-clock'")
    if kind == "epoch":
        unit = obj.get("unit", "ns")
        _require(unit in NS_PER_UNIT, f"{fieldname}.unit",
                 f"must be one of {sorted(NS_PER_UNIT)}")
        return ClockSpec("epoch", unit=unit)
    tz = obj.get("tz_offset_minutes", 0)
    _require(isinstance(tz, int) and -840 <= tz <= 840, f"{fieldname}.tz_offset_minutes",
             "must be an integer in [-840, 840]")
    pattern = obj.get("datetime_pattern", "%Y-%m-%d %H:%M:%S")
    _require(isinstance(pattern, str) and "%" in pattern, f"{fieldname}.datetime_pattern",
             "must be a strftime pattern")
    return ClockSpec("wall-clock", tz_offset_minutes=tz, datetime_pattern=pattern)


def _step_ns(obj: dict, fieldname: str, default_ns: int | None) -> int | None:
    if "step_ns" in obj:
        v = obj["step_ns"]
        _require(isinstance(v, int) and v > 0, f"{fieldname}.step_ns", "must be a positive integer")
        return v
    if "step_s" in obj:
        v = obj["step_s"]
        _require(isinstance(v, (int, float)) and v > 0, f"{fieldname}.step_s",
                 "must be a positive number")
        return round(v * NS)
    return default_ns


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a pipeline config JSON file.

    Relative input paths are resolved against the config file's directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    _require(isinstance(raw, dict), "<root>", "must be a JSON object")
    cfg = PipelineConfig()
    base = path.parent

    inputs = raw.get("inputs", [])
    _require(isinstance(inputs, list), "inputs", "must be a list")
    seen_paths = set()
    for i, entry in enumerate(inputs):
        fieldname = f"inputs[{i}]"
        _require(isinstance(entry, dict), fieldname, "must be an object")
        for key in ("path", "format", "host_id"):
            _require(key in entry, f"{fieldname}.{key}", "is required")
        _require(entry["format"] in PARSERS, f"{fieldname}.format",
                 f"must be one of {sorted(PARSERS)}")
        _require(entry["path"] not in seen_paths, f"{fieldname}.path",
                 "declared more than once")
        seen_paths.add(entry["path"])
        interval = entry.get("interval_ns")
        if interval is not None:
            _require(isinstance(interval, int) and interval > 0,
                     f"{fieldname}.interval_ns", "must be a positive integer")
        cfg.inputs.append(InputSpec(
            path=str(base / entry["path"]),
            label=str(entry["path"]),
            format=entry["format"],
            host_id=str(entry["host_id"]),
            clock=_clock_from_json(entry.get("clock", {"kind": "epoch", "unit": "s"}),
                                   f"{fieldname}.clock"),
            interval_ns=interval,
        ))

    grid = raw.get("grid", {})
    _require(isinstance(grid, dict), "grid", "must be an object")
    cfg.grid_step_ns = _step_ns(grid, "grid", cfg.grid_step_ns)
    if "snap_tolerance_s" in grid or "snap_tolerance_ns" in grid:
        tol = (grid["snap_tolerance_ns"] if "snap_tolerance_ns" in grid
               else round(grid["snap_tolerance_s"] * NS))
        _require(isinstance(tol, int) and 0 <= tol < cfg.grid_step_ns / 2,
                 "grid.snap_tolerance", "must lie in [0, step/2)")
        cfg.snap_tolerance_ns = tol

    imp = raw.get("impute", {})
    _require(isinstance(imp, dict), "impute", "must be an object")
    for glob, pol in imp.get("policies", {}).items():
        _require(isinstance(pol, dict) and "method" in pol, f"impute.policies[{glob!r}]",
                 "must be an object with a 'method'")
        try:
            cfg.impute_policies[glob] = ImputationPolicy(
                pol["method"], pol.get("boundary", "leave-missing"))
        except Exception as exc:
            raise ConfigError(f"config field impute.policies[{glob!r}]: {exc}") from None
    steady = imp.get("steady_state", [])
    _require(isinstance(steady, list), "impute.steady_state", "must be a list of globs")
    cfg.steady_state_globs = tuple(steady)

    tr = raw.get("transform", {})
    _require(isinstance(tr, dict), "transform", "must be an object")
    for glob, spec in tr.get("specs", {}).items():
        _require(isinstance(spec, dict) and "method" in spec, f"transform.specs[{glob!r}]",
                 "must be an object with a 'method'")
        try:
            cfg.transform_specs[glob] = TransformSpec(
                spec["method"], spec.get("log_offset", 0.0))
        except Exception as exc:
            raise ConfigError(f"config field transform.specs[{glob!r}]: {exc}") from None

    corr = raw.get("correlate", {})
    _require(isinstance(corr, dict), "correlate", "must be an object")
    cfg.max_lag = corr.get("max_lag", cfg.max_lag)
    cfg.top_k = corr.get("top_k", cfg.top_k)
    cfg.min_abs_r = corr.get("min_abs_r", cfg.min_abs_r)
    cfg.min_overlap = corr.get("min_overlap", cfg.min_overlap)
    cfg.pairwise = bool(corr.get("pairwise", False))
    _require(isinstance(cfg.max_lag, int) and cfg.max_lag >= 0, "correlate.max_lag",
             "must be a non-negative integer")
    _require(isinstance(cfg.top_k, int) and cfg.top_k >= 0, "correlate.top_k",
             "must be a non-negative integer")
    _require(isinstance(cfg.min_abs_r, (int, float)) and 0 <= cfg.min_abs_r <= 1,
             "correlate.min_abs_r", "must lie in [0, 1]")
    _require(isinstance(cfg.min_overlap, int) and cfg.min_overlap >= 2,
             "correlate.min_overlap", "must be an integer >= 2")

    q = raw.get("quality", {})
    _require(isinstance(q, dict), "quality", "must be an object")
    qc = QualityConfig()
    if "range_bounds" in q:
        _require(isinstance(q["range_bounds"], list), "quality.range_bounds",
                 "must be a list of {glob, lo, hi}")
        qc.range_bounds = []
        for i, b in enumerate(q["range_bounds"]):
            _require(isinstance(b, dict) and {"glob", "lo", "hi"} <= set(b),
                     f"quality.range_bounds[{i}]", "needs glob, lo, hi")
            qc.range_bounds.append((b["glob"], float(b["lo"]), float(b["hi"])))
    for key in ("completeness_warn_fraction", "regularity_cv_warn", "littles_law_tolerance",
                "cpu_decomposition_tolerance_pct", "idle_busy_max_pct"):
        if key in q:
            _require(isinstance(q[key], (int, float)) and q[key] >= 0,
                     f"quality.{key}", "must be a non-negative number")
            setattr(qc, key, float(q[key]))
    if "enable_models" in q:
        qc.enable_models = bool(q["enable_models"])
    cfg.quality = qc

    plots = raw.get("plots", {})
    _require(isinstance(plots, dict), "plots", "must be an object")
    cfg.plot_metrics = list(plots.get("metrics", cfg.plot_metrics))
    cfg.plots = bool(plots.get("enabled", False))

    if "out_dir" in raw:
        cfg.out_dir = str(raw["out_dir"])
    semantics = raw.get("semantics", {})
    _require(isinstance(semantics, dict), "semantics", "must be an object")
    cfg.mid_stamped_at_end = tuple(semantics.get("mid_stamped_at_end", ()))
    return cfg


def effective_json(cfg: PipelineConfig) -> dict:
    """The merged configuration as a JSON-serializable object."""
    return {
        "inputs": [
            {
                "path": i.label,
                "format": i.format,
                "host_id": i.host_id,
                "clock": {
                    "kind": i.clock.kind,
                    **({"unit": i.clock.unit} if i.clock.kind == "epoch" else
                       {"tz_offset_minutes": i.clock.tz_offset_minutes,
                        "datetime_pattern": i.clock.datetime_pattern}),
                },
                **({"interval_ns": i.interval_ns} if i.interval_ns else {}),
            }
            for i in cfg.inputs
        ],
        "grid": {
            "step_ns": cfg.grid_step_ns,
            "snap_tolerance_ns": (cfg.snap_tolerance_ns if cfg.snap_tolerance_ns is not None
                                  else cfg.grid_step_ns // 4),
        },
        "impute": {
            "policies": {g: {"method": p.method, "boundary": p.boundary}
                         for g, p in cfg.impute_policies.items()},
            "steady_state": list(cfg.steady_state_globs),
        },
        "transform": {
            "specs": {g: {"method": s.method, "log_offset": s.log_offset}
                      for g, s in cfg.transform_specs.items()},
        },
        "correlate": {
            "max_lag": cfg.max_lag,
            "top_k": cfg.top_k,
            "min_abs_r": cfg.min_abs_r,
            "min_overlap": cfg.min_overlap,
            "pairwise": cfg.pairwise,
        },
        "quality": {
            "range_bounds": [{"glob": g, "lo": lo, "hi": hi}
                             for g, lo, hi in cfg.quality.range_bounds],
            "completeness_warn_fraction": cfg.quality.completeness_warn_fraction,
            "regularity_cv_warn": cfg.quality.regularity_cv_warn,
            "littles_law_tolerance": cfg.quality.littles_law_tolerance,
            "cpu_decomposition_tolerance_pct": cfg.quality.cpu_decomposition_tolerance_pct,
            "idle_busy_max_pct": cfg.quality.idle_busy_max_pct,
            "enable_models": cfg.quality.enable_models,
        },
        "plots": {"metrics": cfg.plot_metrics, "enabled": cfg.plots},
        "out_dir": cfg.out_dir,
        "semantics": {"mid_stamped_at_end": list(cfg.mid_stamped_at_end)},
    }
