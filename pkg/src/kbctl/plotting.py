"""Bar chart of a suite report, one panel per question complexity."""

from __future__ import annotations

from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from .suite import COMPLEXITIES, ONTOLOGY_ONLY, WITH_RULES, SuiteReport

SERIES = (("OSHCO", "#7f9fbf"), ("OSHCO+R", "#2f5f8f"), ("UR", "#bf7f5f"))


def report_figure(report: SuiteReport) -> Figure:
    ucs = report.use_cases()
    fig = Figure(figsize=(8, 3.2), dpi=100)
    axes = fig.subplots(1, 2, sharey=True)
    width = 0.26
    top = 1
    for ax, cx in zip(axes, COMPLEXITIES):
        values = [
            [report.resolved(uc, cx, ONTOLOGY_ONLY) for uc in ucs],
            [report.resolved(uc, cx, WITH_RULES) for uc in ucs],
            [report.unresolved(uc, cx, WITH_RULES) for uc in ucs],
        ]
        top = max([top] + [v for vs in values for v in vs])
        for k, ((label, color), vs) in enumerate(zip(SERIES, values)):
            xs = [i + (k - 1) * width for i in range(len(ucs))]
            ax.bar(xs, vs, width, label=label, color=color)
        ax.set_xticks(range(len(ucs)))
        ax.set_xticklabels([str(uc) for uc in ucs])
        ax.set_xlabel("use case")
        ax.set_title(f"{cx} questions")
    axes[0].set_ylabel("questions")
    axes[0].set_ylim(0, top + 1)
    axes[1].legend(loc="upper right", frameon=False)
    fig.tight_layout()
    return fig


def save_report_figure(report: SuiteReport, path: str | Path) -> Path:
    """Write the chart; PNG metadata is pinned so reruns are byte-identical."""
    path = Path(path)
    fig = report_figure(report)
    fmt = path.suffix.lstrip(".").lower() or "png"
    metadata = {"Software": None} if fmt == "png" else {"Date": None} if fmt in ("svg", "pdf") else None
    # svg ids are random unless salted
    with matplotlib.rc_context({"svg.hashsalt": "kbctl"}):
        fig.savefig(path, format=fmt, metadata=metadata)
    return path
