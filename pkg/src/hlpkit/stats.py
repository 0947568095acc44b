"""Label-distribution diffing between two label matrices.

Built for before/after comparison around propagation, but the diff is
generic: it reports any change between two matrices over the same clips and
vocabulary (additions or removals), so it can audit arbitrary label
revisions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ClipMismatch, VocabMismatch
from .labelset import LabelMatrix


class ClassChange(NamedTuple):
    mid: str
    name: str
    before: int
    after: int
    ratio: float | None  # None when before == 0


@dataclass(frozen=True)
class HlpReport:
    clip_count: int
    total_before: int
    total_after: int
    avg_before: float
    avg_after: float
    affected_classes: int
    affected_clips: int
    per_class: tuple[ClassChange, ...]

    @property
    def growth_pct(self) -> float:
        if self.total_before == 0:
            return 0.0
        return 100.0 * (self.total_after - self.total_before) / self.total_before


def _ratio_sort_key(change: ClassChange) -> tuple[float, str]:
    if change.ratio is not None:
        ratio = change.ratio
    else:
        ratio = math.inf if change.after > 0 else 1.0
    return (-ratio, change.mid)


def diff_label_matrices(before: LabelMatrix, after: LabelMatrix) -> HlpReport:
    """Quantify label changes between two aligned matrices."""
    if before.clip_ids != after.clip_ids:
        raise ClipMismatch("clip ids (or their order) differ between matrices")
    if before.vocab != after.vocab:
        raise VocabMismatch("matrices use different class vocabularies")

    n_clips = len(before)
    n_classes = len(before.vocab)
    counts_before = np.bincount(before.indices, minlength=n_classes)
    counts_after = np.bincount(after.indices, minlength=n_classes)

    # A row changed iff its (row, class) set changed; compare flattened keys.
    keys_before = (
        np.repeat(np.arange(n_clips, dtype=np.int64), np.diff(before.indptr))
        * n_classes + before.indices
    )
    keys_after = (
        np.repeat(np.arange(n_clips, dtype=np.int64), np.diff(after.indptr))
        * n_classes + after.indices
    )
    differing = np.setxor1d(keys_before, keys_after, assume_unique=True)
    affected_clips = int(np.unique(differing // n_classes).size)

    per_class = []
    for idx, mid, name in before.vocab.entries:
        b, a = int(counts_before[idx]), int(counts_after[idx])
        per_class.append(
            ClassChange(mid, name, b, a, (a / b) if b > 0 else None)
        )
    per_class.sort(key=_ratio_sort_key)

    total_before = before.total_labels
    total_after = after.total_labels
    return HlpReport(
        clip_count=n_clips,
        total_before=total_before,
        total_after=total_after,
        avg_before=(total_before / n_clips) if n_clips else 0.0,
        avg_after=(total_after / n_clips) if n_clips else 0.0,
        affected_classes=int(np.count_nonzero(counts_before != counts_after)),
        affected_clips=affected_clips,
        per_class=tuple(per_class),
    )


def _format_total(total: int) -> str:
    # Exact count, with the conventional millions form alongside when large.
    if total >= 1_000_000:
        return f"{total} ({total / 1e6:.2f}M)"
    return str(total)


def render_report(report: HlpReport, fmt: str = "text") -> bytes:
    """Serialize a report as text, json or csv (json/csv are lossless)."""
    if fmt == "json":
        payload = {
            "summary": {
                "total_before": report.total_before,
                "total_after": report.total_after,
                "avg_before": report.avg_before,
                "avg_after": report.avg_after,
                "affected_classes": report.affected_classes,
                "affected_clips": report.affected_clips,
                "clip_count": report.clip_count,
            },
            "per_class": [
                {
                    "mid": c.mid,
                    "name": c.name,
                    "before": c.before,
                    "after": c.after,
                    "ratio": c.ratio,
                }
                for c in report.per_class
            ],
        }
        return (json.dumps(payload, indent=2) + "\n").encode("utf-8")

    if fmt == "csv":
        buf = io.StringIO()
        summary = (
            f"# clip_count={report.clip_count}"
            f" total_before={report.total_before}"
            f" total_after={report.total_after}"
            f" avg_before={report.avg_before!r}"
            f" avg_after={report.avg_after!r}"
            f" affected_classes={report.affected_classes}"
            f" affected_clips={report.affected_clips}"
        )
        buf.write(summary + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["mid", "name", "before", "after", "ratio"])
        for c in report.per_class:
            writer.writerow(
                [c.mid, c.name, c.before, c.after,
                 "" if c.ratio is None else repr(c.ratio)]
            )
        return buf.getvalue().encode("utf-8")

    if fmt == "text":
        lines = [
            f"Clips: {report.clip_count}",
            f"Affected classes: {report.affected_classes}",
            f"Affected clips: {report.affected_clips}",
            (
                f"Total labels: {_format_total(report.total_before)} -> "
                f"{_format_total(report.total_after)} "
                f"({report.growth_pct:+.1f}%)"
            ),
            f"Avg labels/clip: {report.avg_before:.2f} -> {report.avg_after:.2f}",
        ]
        changed = [c for c in report.per_class if c.before != c.after]
        if changed:
            lines.append("")
            lines.append(f"{'mid':<24} {'before':>10} {'after':>10} {'ratio':>8}")
            for c in changed:
                ratio = "-" if c.ratio is None else f"x{c.ratio:.2f}"
                lines.append(
                    f"{c.mid:<24} {c.before:>10} {c.after:>10} {ratio:>8}"
                )
        return ("\n".join(lines) + "\n").encode("utf-8")

    raise ValueError(f"unknown report format {fmt!r}")


def report_from_json(raw: bytes) -> HlpReport:
    """Inverse of the json rendering."""
    payload = json.loads(raw.decode("utf-8"))
    summary = payload["summary"]
    per_class = tuple(
        ClassChange(c["mid"], c["name"], c["before"], c["after"], c["ratio"])
        for c in payload["per_class"]
    )
    return HlpReport(
        clip_count=summary["clip_count"],
        total_before=summary["total_before"],
        total_after=summary["total_after"],
        avg_before=summary["avg_before"],
        avg_after=summary["avg_after"],
        affected_classes=summary["affected_classes"],
        affected_clips=summary["affected_clips"],
        per_class=per_class,
    )
