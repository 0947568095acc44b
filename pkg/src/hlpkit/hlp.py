"""Upward propagation of labels and scores through an ontology.

Two operations share one rule: a node forwards to its parent only when that
parent is unique.

* ``propagate_labels`` rewrites a binary label matrix so that every positive
  class's single-parent ancestors are positive too (dataset pre-processing).
* ``propagate_scores`` pushes prediction scores upward by maximum,
  ``s_parent = max(s_parent, s_child)``, visiting nodes children-first so a
  single pass reaches the fixed point (model-output post-processing).

Both are pure: inputs are never mutated, and output is byte-identical for
any worker count (rows are processed in fixed-size chunks whose boundaries
do not depend on the thread count).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import UnknownMid
from .labelset import ClassVocabulary, LabelMatrix, ScoreMatrix
from .ontology import OntologyGraph, PropagationMap

# Rows per work unit. Fixed (not derived from the thread count) so results
# are bit-identical regardless of parallelism.
_CHUNK_ROWS = 131072


def _ragged_ranges(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenation of arange(s, s+l) for each (s, l); lengths must be > 0."""
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    steps = np.ones(total, dtype=np.int64)
    boundaries = np.cumsum(lengths[:-1])
    steps[0] = starts[0]
    steps[boundaries] = starts[1:] - (starts[:-1] + lengths[:-1] - 1)
    return np.cumsum(steps)


class _ClosureTable:
    """Per input class: output column indices of the class plus its chain."""

    def __init__(self, label_vocab: ClassVocabulary, pmap: PropagationMap,
                 output_vocab: ClassVocabulary):
        out_index = output_vocab.mid_to_index
        for mid in output_vocab.mids:
            if mid not in pmap.mids:
                raise UnknownMid(mid)
        cols: list[np.ndarray] = []
        for mid in label_vocab.mids:
            if mid not in pmap.mids:
                raise UnknownMid(mid)
            members = (mid,) + pmap.chains[mid]
            resolved = sorted(
                out_index[m] for m in members if m in out_index
            )
            cols.append(np.asarray(resolved, dtype=np.int64))
        self.lengths = np.array([len(c) for c in cols], dtype=np.int64)
        self.flat = (
            np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
        )
        self.offsets = np.concatenate(
            ([0], np.cumsum(self.lengths))
        ).astype(np.int64)


def _propagate_rows(labels: LabelMatrix, table: _ClosureTable, n_out: int,
                    lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Propagate clips [lo, hi); returns (per-row counts, sorted indices)."""
    span = labels.indptr[lo:hi + 1]
    pos = labels.indices[span[0]:span[-1]].astype(np.int64)
    if pos.size == 0:
        return np.zeros(hi - lo, dtype=np.int64), np.empty(0, dtype=np.int32)
    row_of_pos = np.repeat(np.arange(hi - lo, dtype=np.int64), np.diff(span))

    lengths = table.lengths[pos]
    nonzero = lengths > 0
    starts = table.offsets[pos[nonzero]]
    expanded_cols = table.flat[_ragged_ranges(starts, lengths[nonzero])]
    expanded_rows = np.repeat(row_of_pos[nonzero], lengths[nonzero])

    keys = np.unique(expanded_rows * n_out + expanded_cols)
    out_rows = keys // n_out
    out_cols = keys % n_out
    counts = np.bincount(out_rows, minlength=hi - lo)
    return counts.astype(np.int64), out_cols.astype(np.int32)


def propagate_labels(
    labels: LabelMatrix,
    pmap: PropagationMap,
    output_vocab: ClassVocabulary | None = None,
    threads: int = 1,
) -> LabelMatrix:
    """Propagate positive labels up their single-parent ancestor chains.

    Each output row is the input row plus every chain member of each
    positive class, restricted to ``output_vocab`` (default: the input
    vocabulary). Clip ids, order and segment times are unchanged.
    """
    if output_vocab is None:
        output_vocab = labels.vocab
    table = _ClosureTable(labels.vocab, pmap, output_vocab)
    n_out = len(output_vocab)
    n = len(labels)

    chunks = [(lo, min(lo + _CHUNK_ROWS, n)) for lo in range(0, n, _CHUNK_ROWS)]
    if not chunks:
        results = []
    elif threads <= 1 or len(chunks) == 1:
        results = [
            _propagate_rows(labels, table, n_out, lo, hi) for lo, hi in chunks
        ]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(
                    lambda span: _propagate_rows(labels, table, n_out, *span),
                    chunks,
                )
            )

    counts = (
        np.concatenate([r[0] for r in results])
        if results else np.empty(0, dtype=np.int64)
    )
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = (
        np.concatenate([r[1] for r in results])
        if results else np.empty(0, dtype=np.int32)
    )
    return LabelMatrix(
        labels.clip_ids, output_vocab, indptr, indices,
        segment_times=labels.segment_times,
    )


def propagate_scores(
    scores: ScoreMatrix,
    graph: OntologyGraph,
    output_vocab: ClassVocabulary | None = None,
    threads: int = 1,
) -> ScoreMatrix:
    """Push scores upward by max along single-parent edges.

    Nodes are visited children-first, so one pass reaches the fixed point.
    Ontology classes absent from the input matrix participate with -inf
    (they relay received scores but never contribute their own) and are
    dropped from the output, which is restricted to ``output_vocab``
    (default: the input vocabulary).
    """
    if output_vocab is None:
        output_vocab = scores.vocab
    for mid in scores.vocab.mids:
        if mid not in graph.nodes:
            raise UnknownMid(mid)
    for mid in output_vocab.mids:
        if mid not in graph.nodes:
            raise UnknownMid(mid)

    node_col = {mid: i for i, mid in enumerate(graph.nodes)}
    in_cols = np.array([node_col[m] for m in scores.vocab.mids], dtype=np.int64)
    out_mids = [m for m in output_vocab.mids if m in scores.vocab.mid_to_index]
    out_cols = np.array([node_col[m] for m in out_mids], dtype=np.int64)

    edges = [
        (node_col[mid], node_col[graph.single_parent(mid)])
        for mid in graph.child_first_order
        if graph.single_parent(mid) is not None
    ]

    n = len(scores)
    n_nodes = len(graph.nodes)
    out = np.empty((n, len(out_mids)), dtype=np.float32)

    def run_chunk(lo: int, hi: int) -> None:
        ext = np.full((hi - lo, n_nodes), -np.inf, dtype=np.float32)
        ext[:, in_cols] = scores.scores[lo:hi]
        for child, parent in edges:
            np.maximum(ext[:, parent], ext[:, child], out=ext[:, parent])
        out[lo:hi] = ext[:, out_cols]

    chunk_rows = min(_CHUNK_ROWS, max(1, (16 << 20) // max(1, 4 * n_nodes)))
    chunks = [(lo, min(lo + chunk_rows, n)) for lo in range(0, n, chunk_rows)]
    if threads <= 1 or len(chunks) <= 1:
        for lo, hi in chunks:
            run_chunk(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda span: run_chunk(*span), chunks))

    out_vocab = ClassVocabulary.from_pairs(
        (m, output_vocab.display_name(m)) for m in out_mids
    )
    return ScoreMatrix(scores.clip_ids, out_vocab, out)
