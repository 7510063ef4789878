"""Optional chart emission: a multi-series line chart and a nomination heatmap.

Plotting never alters analytical outputs and is never fatal: a missing
backend raises PlotUnavailable, which the CLI downgrades to a warning.
Charts are standalone SVG files.
"""

from __future__ import annotations

from fnmatch import fnmatchcase
from pathlib import Path

import numpy as np

from .correlate import NominationReport
from .errors import PlotUnavailable
from .timealign import TidyTable

MAX_SERIES = 8


def _backend():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        return plt
    except Exception as exc:  # pragma: no cover - depends on environment
        raise PlotUnavailable(f"matplotlib unavailable: {exc}") from exc


def emit_plots(
    table: TidyTable,
    report: NominationReport | None,
    out_dir: str | Path,
    metric_globs: list[str] | None = None,
) -> list[Path]:
    """Write series.svg and (when nominations exist) heatmap.svg under out_dir."""
    plt = _backend()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    globs = metric_globs or ["*"]

    picked = [
        (j, col) for j, col in enumerate(table.columns)
        if any(fnmatchcase(col.metric_name, g) or fnmatchcase(col.cid, g) for g in globs)
    ][:MAX_SERIES]
    if picked:
        fig, ax = plt.subplots(figsize=(10, 5))
        t = (table.grid.points() - table.grid.start_ns) / 1e9
        for j, col in picked:
            present = table.present[:, j]
            ax.plot(t[present], table.values[present, j], label=col.cid, linewidth=1.0)
        ax.set_xlabel("seconds since grid start")
        ax.set_ylabel("transformed value")
        ax.legend(loc="upper right", fontsize="small")
        ax.set_title("selected metrics on a common scale")
        path = out_dir / "series.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)

    if report is not None and report.results:
        metrics = sorted({m for c in report.results for m in (c.metric_a, c.metric_b)})
        idx = {m: i for i, m in enumerate(metrics)}
        mat = np.zeros((len(metrics), len(metrics)))
        for c in report.results:
            i, j = idx[c.metric_a], idx[c.metric_b]
            mat[i, j] = mat[j, i] = abs(c.r_at_best)
        fig, ax = plt.subplots(figsize=(8, 7))
        im = ax.imshow(mat, vmin=0.0, vmax=1.0, cmap="viridis")
        ax.set_xticks(range(len(metrics)), metrics, rotation=90, fontsize="x-small")
        ax.set_yticks(range(len(metrics)), metrics, fontsize="x-small")
        fig.colorbar(im, ax=ax, label="|r| at best lag")
        ax.set_title("nominated pairs")
        fig.tight_layout()
        path = out_dir / "heatmap.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written
