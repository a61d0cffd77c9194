"""Rendering of metric and violation reports: text tables, JSON, CSV and
figure files.

The text table mirrors the result-table layout used throughout the
trials: one row per (model, batch size), paired Acc/F1 percentage
columns under each example count. Figures are written as SVG next to
the delimited output; matplotlib is imported lazily so non-plotting
paths never pay for it.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import UnsupportedFormat
from ..model import FaultTestCase
from ..sim.trace import Trace
from .diffing import ViolationReport
from .metrics import MetricsReport

TEXT = "table-text"
JSON = "json"
CSV = "csv"
SVG = "svg-plot"


def _pct(x: float) -> str:
    return format(x, ".1f")


def render_metrics_table(reports: Sequence[MetricsReport]) -> str:
    """Text table, one Acc/F1 pair per example-count column."""
    if not reports:
        return "(no metric cells)\n"
    trials = sorted({r.trial for r in reports})
    n_values = sorted({r.n_examples for r in reports})
    rows = sorted({(r.trial, r.model, r.batch_size) for r in reports})
    by_cell = {(r.trial, r.model, r.batch_size, r.n_examples): r for r in reports}

    label_w = max(len(f"{model} (BS={bs})") for _, model, bs in rows) + 2
    col_w = 14
    lines = []
    for trial in trials:
        lines.append(f"Trial: {trial}")
        header1 = " " * label_w + "Number of Examples".center(col_w * len(n_values))
        header2 = " " * label_w + "".join(str(n).center(col_w) for n in n_values)
        header3 = " " * label_w + "".join("Acc    F1".center(col_w) for _ in n_values)
        lines += [header1, header2, header3]
        for t, model, bs in rows:
            if t != trial:
                continue
            label = f"{model} (BS={bs})".ljust(label_w)
            cells = []
            for n in n_values:
                r = by_cell.get((t, model, bs, n))
                if r is None:
                    cells.append("-      -".center(col_w))
                else:
                    cells.append(f"{_pct(r.accuracy_pct)}   {_pct(r.f1_macro_pct)}".center(col_w))
            lines.append(label + "".join(cells))
        lines.append("")
    return "\n".join(lines)


def metrics_to_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "trial",
            "model",
            "batch_size",
            "n_examples",
            "accuracy_pct",
            "f1_macro_pct",
            "n_scored",
            "n_pool",
            "failure_count",
            "prompt_tokens",
            "completion_tokens",
        ]
    )
    for r in reports:
        writer.writerow(
            [
                r.trial,
                r.model,
                r.batch_size,
                r.n_examples,
                _pct(r.accuracy_pct),
                _pct(r.f1_macro_pct),
                r.n_scored,
                r.n_pool,
                r.failure_count,
                r.prompt_tokens,
                r.completion_tokens,
            ]
        )
    return buf.getvalue()


def metrics_to_json(reports: Sequence[MetricsReport]) -> str:
    return json.dumps([r.to_json_obj() for r in reports], indent=2) + "\n"


def metrics_from_json(text: str) -> list[MetricsReport]:
    return [MetricsReport.from_json_obj(obj) for obj in json.loads(text)]


def render_report(
    report,
    fmt: str,
    traces: tuple[Trace, Trace] | None = None,
    tcs: Sequence[FaultTestCase] = (),
) -> str:
    """Render a metrics list or a violation report to a document string.

    svg-plot output is the figure markup itself: a score-vs-examples
    chart for metrics, or (given the golden/faulty trace pair) stacked
    golden-vs-faulty overlays with injection windows shaded. The plot_*
    functions below write the same figures to files for the CLI.
    """
    if isinstance(report, ViolationReport):
        if fmt == JSON:
            return json.dumps(report.to_json_obj(), indent=2) + "\n"
        if fmt == TEXT:
            return report.to_markdown()
        if fmt == SVG:
            if traces is None:
                raise UnsupportedFormat("svg-plot for a violation report needs the trace pair")
            return _overlay_svg(traces[0], traces[1], tcs)
        raise UnsupportedFormat(f"violation reports render as {TEXT}, {JSON} or {SVG}, not {fmt!r}")
    reports = list(report) if isinstance(report, Iterable) else [report]
    if fmt == TEXT:
        return render_metrics_table(reports)
    if fmt == JSON:
        return metrics_to_json(reports)
    if fmt == CSV:
        return metrics_to_csv(reports)
    if fmt == SVG:
        buf = io.StringIO()
        _metrics_figure(reports).savefig(buf, format="svg", metadata={"Date": None})
        return buf.getvalue()
    raise UnsupportedFormat(f"unknown metrics format {fmt!r}")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    # reproducible element ids: figure bytes must not vary across runs
    matplotlib.rcParams["svg.hashsalt"] = "autofi"
    import matplotlib.pyplot as plt

    return plt


def _metrics_figure(reports: Sequence[MetricsReport]):
    """Acc/F1 percentage vs example count, one line pair per (model, BS)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.2))
    groups = sorted({(r.trial, r.model, r.batch_size) for r in reports})
    for trial, model, bs in groups:
        cells = sorted(
            (r for r in reports if (r.trial, r.model, r.batch_size) == (trial, model, bs)),
            key=lambda r: r.n_examples,
        )
        ns = [r.n_examples for r in cells]
        ax.plot(ns, [r.accuracy_pct for r in cells], marker="o", label=f"{model} BS={bs} Acc")
        ax.plot(ns, [r.f1_macro_pct for r in cells], marker="s", linestyle="--", label=f"{model} BS={bs} F1")
    ax.set_xlabel("number of examples")
    ax.set_ylabel("score [%]")
    ax.set_title(f"{reports[0].trial} trial" if reports else "metrics")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def plot_metrics(reports: Sequence[MetricsReport], path) -> Path:
    plt = _pyplot()
    path = Path(path)
    fig = _metrics_figure(reports)
    # no embedded creation date: figure bytes must be idempotent
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return path


def _windows_by_channel(tcs: Sequence[FaultTestCase]) -> dict:
    windows: dict = {}
    for tc in tcs:
        for ch, cf in tc.faults:
            windows.setdefault(ch, []).append(cf.window)
    return windows


def _draw_overlay(ax, golden: Trace, faulty: Trace, name: str, windows) -> None:
    ax.plot(golden.times, golden.channels[name], label="golden", linewidth=0.9)
    ax.plot(faulty.times, faulty.channels[name], label="faulty", linewidth=0.9, alpha=0.8)
    for w in windows.get(name, []):
        ax.axvspan(w.t_start, w.t_end, color="tab:red", alpha=0.12, label="injection window")
    # dedupe legend labels from repeated spans
    handles, labels = ax.get_legend_handles_labels()
    seen = {}
    for h, l in zip(handles, labels):
        seen.setdefault(l, h)
    ax.legend(seen.values(), seen.keys(), fontsize=7)
    ax.set_xlabel("t [s]")
    ax.set_ylabel(name)
    ax.grid(True, alpha=0.3)


def _overlay_svg(golden: Trace, faulty: Trace, tcs: Sequence[FaultTestCase]) -> str:
    plt = _pyplot()
    names = list(golden.signal_names)
    windows = _windows_by_channel(tcs)
    fig, axes = plt.subplots(len(names), 1, figsize=(8, 2.2 * len(names)), squeeze=False)
    for ax, name in zip(axes[:, 0], names):
        _draw_overlay(ax, golden, faulty, name, windows)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def plot_trace_overlays(
    golden: Trace,
    faulty: Trace,
    tcs: Sequence[FaultTestCase],
    outdir,
    channels: Sequence[str] | None = None,
) -> list[Path]:
    """Golden-vs-faulty overlay per channel, injection windows shaded.

    Returns the written SVG paths, one figure per channel.
    """
    plt = _pyplot()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    windows = _windows_by_channel(tcs)
    names = list(channels) if channels is not None else list(golden.signal_names)
    written: list[Path] = []
    for name in names:
        fig, ax = plt.subplots(figsize=(8, 3.2))
        _draw_overlay(ax, golden, faulty, name, windows)
        ax.set_title(f"{name}: golden vs faulty")
        fig.tight_layout()
        path = outdir / f"{name}.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
