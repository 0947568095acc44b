"""Figure rendering for CLI reports.

Kept separate from the report computations: the library modules stay
plot-free, and the CLI opts in via ``--figure PATH``. Uses the Agg backend
so rendering works headless.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import EvalReport  # noqa: E402
from .stats import HlpReport  # noqa: E402

_TOP_CLASSES = 25


def render_stats_figure(report: HlpReport, path: str) -> None:
    """Horizontal bars of per-class positive counts before/after, top movers."""
    changed = [c for c in report.per_class if c.before != c.after]
    changed = changed[:_TOP_CLASSES]

    fig, ax = plt.subplots(figsize=(9, max(3.0, 0.35 * len(changed) + 1.5)))
    if changed:
        names = [c.name or c.mid for c in changed][::-1]
        before = [c.before for c in changed][::-1]
        after = [c.after for c in changed][::-1]
        y = range(len(changed))
        ax.barh([i + 0.2 for i in y], after, height=0.4,
                label="after", color="#2b8cbe")
        ax.barh([i - 0.2 for i in y], before, height=0.4,
                label="before", color="#bdbdbd")
        ax.set_yticks(list(y))
        ax.set_yticklabels(names, fontsize=8)
        ax.set_xscale("log")
        ax.set_xlabel("positive clips (log scale)")
        ax.legend(loc="lower right")
    else:
        ax.text(0.5, 0.5, "no label changes", ha="center", va="center")
        ax.set_axis_off()
    ax.set_title(
        f"Label changes: {report.total_before} -> {report.total_after} labels "
        f"({report.growth_pct:+.1f}%), "
        f"{report.affected_classes} classes affected"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_eval_figure(report: EvalReport, path: str) -> None:
    """Histogram of defined per-class APs with the mAP marked."""
    aps = [c.ap for c in report.per_class if c.ap is not None]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    if aps:
        bins = min(40, max(5, int(math.sqrt(len(aps)) * 2)))
        ax.hist(aps, bins=bins, range=(0.0, 1.0), color="#2b8cbe",
                edgecolor="white")
        if report.map is not None:
            ax.axvline(report.map, color="#d7301f", linestyle="--",
                       label=f"mAP = {report.map:.4f}")
            ax.legend()
        ax.set_xlabel("per-class average precision")
        ax.set_ylabel("classes")
    else:
        ax.text(0.5, 0.5, "no classes with positives", ha="center", va="center")
        ax.set_axis_off()
    ax.set_title(
        f"{report.classes_evaluated} classes evaluated, "
        f"{report.classes_skipped} skipped"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
