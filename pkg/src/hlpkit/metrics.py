"""Class-wise average precision and cross-vocabulary evaluation.

AP here is the rank-based form used for audio tagging: sort clips by
descending score (ties broken by ascending original position, so results
are reproducible), then average precision-at-k over the ranks k that hold a
positive. mAP is the macro mean over classes that have at least one
positive; zero-positive classes are skipped, not scored 0, so padding a
vocabulary cannot move the mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ClipMismatch, EmptySubset, LengthMismatch, NonFiniteValue, UnknownMid
from .labelset import ClassVocabulary, LabelMatrix, ScoreMatrix


class ClassAp(NamedTuple):
    mid: str
    ap: float | None
    positives: int


@dataclass(frozen=True)
class EvalReport:
    per_class: tuple[ClassAp, ...]
    map: float | None
    classes_evaluated: int
    classes_skipped: int

    def to_json_bytes(self) -> bytes:
        payload = {
            "map": self.map,
            "classes_evaluated": self.classes_evaluated,
            "classes_skipped": self.classes_skipped,
            "per_class": [
                {"mid": c.mid, "ap": c.ap, "positives": c.positives}
                for c in self.per_class
            ],
        }
        return (json.dumps(payload, indent=2) + "\n").encode("utf-8")

    def to_text(self) -> str:
        lines = [
            f"mAP: {self.map:.6f}" if self.map is not None else "mAP: undefined",
            f"Classes evaluated: {self.classes_evaluated}",
            f"Classes skipped (no positives): {self.classes_skipped}",
            "",
            f"{'mid':<24} {'AP':>10} {'positives':>10}",
        ]
        for c in self.per_class:
            ap = f"{c.ap:.6f}" if c.ap is not None else "-"
            lines.append(f"{c.mid:<24} {ap:>10} {c.positives:>10}")
        return "\n".join(lines)


def average_precision(scores: Sequence[float], labels: Sequence[int]) -> float | None:
    """AP of one ranking; None when there are no positives.

    Equals (1/P) * sum over positive ranks k of (positives in top k) / k
    under a descending stable sort of the scores.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise LengthMismatch(
            f"scores ({s.shape}) and labels ({y.shape}) must be equal-length vectors"
        )
    if not np.isfinite(s).all():
        raise NonFiniteValue()
    total = int(np.count_nonzero(y))
    if total == 0:
        return None
    # Stable sort on negated scores: descending score, ties by ascending index.
    order = np.argsort(-s, kind="stable")
    hits = (y[order] != 0)
    ranks = np.nonzero(hits)[0] + 1
    precision_at_hits = np.cumsum(hits)[hits] / ranks
    return float(precision_at_hits.sum() / total)


def restrict_to_shared_vocab(
    vocab_a: ClassVocabulary, vocab_b: ClassVocabulary
) -> ClassVocabulary:
    """Classes present in both vocabularies, in vocab_a order, reindexed."""
    return ClassVocabulary.from_pairs(
        (mid, name)
        for _, mid, name in vocab_a.entries
        if mid in vocab_b.mid_to_index
    )


def _indicator_columns(labels: LabelMatrix, subset: ClassVocabulary) -> np.ndarray:
    col_map = np.full(len(labels.vocab), -1, dtype=np.int64)
    for k, mid in enumerate(subset.mids):
        col_map[labels.vocab.mid_to_index[mid]] = k
    dense = np.zeros((len(labels), len(subset)), dtype=bool)
    if labels.indices.size:
        rows = np.repeat(
            np.arange(len(labels), dtype=np.int64), np.diff(labels.indptr)
        )
        cols = col_map[labels.indices]
        keep = cols >= 0
        dense[rows[keep], cols[keep]] = True
    return dense


def mean_average_precision(
    scores: ScoreMatrix,
    labels: LabelMatrix,
    class_subset: ClassVocabulary | None = None,
) -> EvalReport:
    """Macro mAP of score columns against binary label columns.

    Default class subset: the intersection of the two vocabularies in score
    order. Clips must be identical and identically ordered in both inputs.
    """
    if scores.clip_ids != labels.clip_ids:
        raise ClipMismatch("score and label clip ids (or their order) differ")
    if class_subset is None:
        class_subset = restrict_to_shared_vocab(scores.vocab, labels.vocab)
    else:
        for mid in class_subset.mids:
            if mid not in scores.vocab or mid not in labels.vocab:
                raise UnknownMid(mid)
    if len(class_subset) == 0:
        raise EmptySubset("no classes shared between scores and labels")

    score_cols = np.array(
        [scores.vocab.mid_to_index[m] for m in class_subset.mids], dtype=np.int64
    )
    score_block = scores.scores[:, score_cols]
    truth = _indicator_columns(labels, class_subset)

    per_class = []
    defined = []
    for k, mid in enumerate(class_subset.mids):
        positives = int(truth[:, k].sum())
        if positives == 0:
            per_class.append(ClassAp(mid, None, 0))
            continue
        ap = average_precision(score_block[:, k], truth[:, k])
        per_class.append(ClassAp(mid, ap, positives))
        defined.append(ap)

    return EvalReport(
        per_class=tuple(per_class),
        map=(float(np.mean(defined)) if defined else None),
        classes_evaluated=len(defined),
        classes_skipped=len(per_class) - len(defined),
    )
