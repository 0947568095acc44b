"""Seeded synthetic fixtures and the brute-force propagation oracle.

Generators are pure functions of their config (see :mod:`hlpkit.rng` for
the PRNG contract): the ontology generator consumes a sequential SplitMix64
stream seeded with ``seed``, while label and score sampling are addressable
by cell index on streams ``seed + 1`` and ``seed + 2``, which makes bulk
generation chunkable without changing its output.

``oracle_propagate`` is the reference semantics for upward label
propagation, implemented as a naive fixed-point loop with no precomputed
structure. It exists to check the fast path, so it must stay independent of
it; keep inputs small (hundreds of nodes, not the 2M-clip benchmark).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labelset import ClassVocabulary, LabelMatrix, ScoreMatrix
from .ontology import OntologyGraph, OntologyNode, build_graph
from .rng import SplitMix64, uniform_f32_at, values_at

_LABEL_STREAM_OFFSET = 1
_SCORE_STREAM_OFFSET = 2
_CELL_CHUNK = 1 << 22


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_nodes: int = 50
    max_children: int = 4
    multi_parent_prob: float = 0.0
    n_clips: int = 100
    label_density: float = 2.0

    def __post_init__(self):
        if self.n_nodes < 1 or self.n_clips < 1 or self.max_children < 1:
            raise ValueError("n_nodes, n_clips and max_children must be >= 1")
        if not 0.0 <= self.multi_parent_prob <= 1.0:
            raise ValueError("multi_parent_prob must be in [0, 1]")
        if self.label_density < 0.0:
            raise ValueError("label_density must be >= 0")


def _synth_mid(i: int) -> str:
    return f"/synth/{i:05d}"


def gen_ontology(cfg: SynthConfig) -> OntologyGraph:
    """Random DAG, acyclic by construction: node i's parents are all < i.

    Every node after the first gets one parent drawn uniformly from the
    earlier nodes that still have child capacity, plus (with probability
    ``multi_parent_prob``) a second distinct parent.
    """
    rng = SplitMix64(cfg.seed)
    children: list[list[int]] = [[] for _ in range(cfg.n_nodes)]
    for i in range(1, cfg.n_nodes):
        available = [
            j for j in range(i) if len(children[j]) < cfg.max_children
        ]
        if not available:
            continue
        first = available[rng.next_below(len(available))]
        children[first].append(i)
        if rng.next_unit() < cfg.multi_parent_prob:
            second_pool = [
                j for j in available
                if j != first and len(children[j]) < cfg.max_children
            ]
            if second_pool:
                second = second_pool[rng.next_below(len(second_pool))]
                children[second].append(i)
    nodes = [
        OntologyNode(
            mid=_synth_mid(i),
            display_name=f"synth node {i}",
            child_mids=tuple(_synth_mid(c) for c in children[i]),
        )
        for i in range(cfg.n_nodes)
    ]
    return build_graph(nodes)


def vocab_of(graph: OntologyGraph) -> ClassVocabulary:
    """Vocabulary over all graph nodes, in node order."""
    return ClassVocabulary.from_pairs(
        (node.mid, node.display_name) for node in graph.nodes.values()
    )


def _clip_id(i: int) -> str:
    return f"clip{i:07d}"


def gen_labels(cfg: SynthConfig, graph: OntologyGraph) -> LabelMatrix:
    """Bernoulli positives, i.i.d. per (clip, class) at rate density/classes.

    Cell (i, j) is positive iff stream value ``i * n_classes + j`` on stream
    ``seed + 1`` falls below ``floor(rate * 2^64)``.
    """
    vocab = vocab_of(graph)
    n_classes = len(vocab)
    rate = min(1.0, cfg.label_density / n_classes)
    threshold = np.uint64(min(int(rate * 2.0 ** 64), (1 << 64) - 1))
    seed = cfg.seed + _LABEL_STREAM_OFFSET

    total_cells = cfg.n_clips * n_classes
    indptr = np.zeros(cfg.n_clips + 1, dtype=np.int64)
    chunks: list[np.ndarray] = []
    counts = np.zeros(cfg.n_clips, dtype=np.int64)
    rows_per_chunk = max(1, _CELL_CHUNK // n_classes)
    for lo in range(0, cfg.n_clips, rows_per_chunk):
        hi = min(lo + rows_per_chunk, cfg.n_clips)
        u = values_at(seed, lo * n_classes, (hi - lo) * n_classes)
        hits = np.nonzero(u < threshold)[0]
        rows = hits // n_classes
        cols = (hits % n_classes).astype(np.int32)
        counts[lo:hi] = np.bincount(rows, minlength=hi - lo)
        chunks.append(cols)
    np.cumsum(counts, out=indptr[1:])
    indices = (
        np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int32)
    )
    assert indices.size <= total_cells
    clip_ids = [_clip_id(i) for i in range(cfg.n_clips)]
    return LabelMatrix(clip_ids, vocab, indptr, indices)


def gen_scores(cfg: SynthConfig, graph: OntologyGraph) -> ScoreMatrix:
    """Uniform [0, 1) float32 scores; cell-addressable on stream seed + 2."""
    vocab = vocab_of(graph)
    n_classes = len(vocab)
    seed = cfg.seed + _SCORE_STREAM_OFFSET
    scores = np.empty((cfg.n_clips, n_classes), dtype=np.float32)
    rows_per_chunk = max(1, _CELL_CHUNK // n_classes)
    for lo in range(0, cfg.n_clips, rows_per_chunk):
        hi = min(lo + rows_per_chunk, cfg.n_clips)
        u = uniform_f32_at(seed, lo * n_classes, (hi - lo) * n_classes)
        scores[lo:hi] = u.reshape(hi - lo, n_classes)
    clip_ids = [_clip_id(i) for i in range(cfg.n_clips)]
    return ScoreMatrix(clip_ids, vocab, scores)


def oracle_propagate(
    labels: LabelMatrix,
    graph: OntologyGraph,
    traversal_vocab: ClassVocabulary | None = None,
) -> LabelMatrix:
    """Reference upward propagation: naive per-clip fixed point.

    Repeatedly add the unique parent of every positive node until a full
    pass adds nothing, then restrict each row to the label vocabulary.
    When ``traversal_vocab`` is given, a parent outside it is neither added
    nor traversed (the labelable-only rule).
    """
    allowed = (
        None if traversal_vocab is None else set(traversal_vocab.mids)
    )
    out_index = labels.vocab.mid_to_index
    rows_out: list[list[int]] = []
    for i in range(len(labels)):
        positives = set(labels.row_mids(i))
        while True:
            added = set()
            for mid in positives:
                parents = graph.parent_index[mid]
                if len(parents) != 1:
                    continue
                parent = parents[0]
                if allowed is not None and parent not in allowed:
                    continue
                if parent not in positives:
                    added.add(parent)
            if not added:
                break
            positives |= added
        rows_out.append(
            sorted(out_index[m] for m in positives if m in out_index)
        )
    return LabelMatrix.from_rows(
        labels.clip_ids, labels.vocab, rows_out,
        segment_times=labels.segment_times,
    )
