"""Dataset metadata ingestion and emission.

Three kinds of files:

* class-index CSV — header ``index,mid,display_name`` mapping contiguous
  integer indices to class mids (AudioSet's ``class_labels_indices.csv``);
* segment CSV — AudioSet-style clip rows
  ``YTID, start_seconds, end_seconds, "mid1,mid2,..."`` with ``#`` comment
  lines;
* score matrices — either a plain CSV (``clip_id,<mid1>,...``) or the HLPS
  binary format (bit-exact float32 round trip, suitable for millions of
  clips).

Label matrices are stored sparse (CSR over positive class indices); score
matrices are dense float32.
"""

from __future__ import annotations

import csv
import io
import struct
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    DuplicateMid,
    MalformedRow,
    MissingHeader,
    NonContiguousIndices,
    NonFiniteValue,
    UnknownMid,
)

CLASS_INDEX_HEADER = ("index", "mid", "display_name")
HLPS_MAGIC = b"HLPSCOR1"


@dataclass(frozen=True)
class ClassVocabulary:
    """Ordered class list with a contiguous 0-based index per mid."""

    entries: tuple[tuple[int, str, str], ...]
    mid_to_index: dict[str, int] = field(repr=False)

    @classmethod
    def from_pairs(cls, pairs) -> "ClassVocabulary":
        """Build from an iterable of (mid, display_name), indexed in order."""
        entries = []
        index_map: dict[str, int] = {}
        for i, (mid, name) in enumerate(pairs):
            if mid in index_map:
                raise DuplicateMid(mid, "vocabulary")
            index_map[mid] = i
            entries.append((i, mid, name))
        return cls(entries=tuple(entries), mid_to_index=index_map)

    @property
    def mids(self) -> list[str]:
        return [mid for _, mid, _ in self.entries]

    def display_name(self, mid: str) -> str:
        return self.entries[self.mid_to_index[mid]][2]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, mid: str) -> bool:
        return mid in self.mid_to_index

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClassVocabulary):
            return NotImplemented
        return self.entries == other.entries


class LabelMatrix:
    """Sparse clip-by-class binary positives.

    Rows are held CSR-style: ``indices[indptr[i]:indptr[i+1]]`` is the
    sorted, duplicate-free list of positive class indices for clip ``i``.
    ``segment_times`` is an optional (n_clips, 2) float array of
    (start_seconds, end_seconds), carried for round-tripping segment CSVs.
    Instances are treated as immutable.
    """

    def __init__(self, clip_ids, vocab: ClassVocabulary, indptr, indices,
                 segment_times=None):
        self.clip_ids: list[str] = list(clip_ids)
        self.vocab = vocab
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int32)
        if segment_times is not None:
            segment_times = np.asarray(segment_times, dtype=np.float64)
            if segment_times.size != 2 * len(self.clip_ids):
                raise DimensionMismatch(
                    f"segment_times shape {segment_times.shape} does not match "
                    f"{len(self.clip_ids)} clips"
                )
            segment_times = segment_times.reshape(len(self.clip_ids), 2)
        self.segment_times = segment_times
        if self.indptr.shape != (len(self.clip_ids) + 1,):
            raise DimensionMismatch(
                f"indptr length {self.indptr.shape[0]} does not match "
                f"{len(self.clip_ids)} clips"
            )
        if self.indices.size and int(self.indices.max()) >= len(vocab):
            raise DimensionMismatch(
                f"class index {int(self.indices.max())} out of range for "
                f"vocabulary of size {len(vocab)}"
            )

    @classmethod
    def from_rows(cls, clip_ids, vocab: ClassVocabulary, rows,
                  segment_times=None) -> "LabelMatrix":
        """Build from per-clip iterables of class indices (deduped, sorted)."""
        indptr = np.zeros(len(clip_ids) + 1, dtype=np.int64)
        chunks = []
        for i, row in enumerate(rows):
            uniq = sorted(set(int(c) for c in row))
            chunks.append(np.asarray(uniq, dtype=np.int32))
            indptr[i + 1] = indptr[i] + len(uniq)
        indices = (
            np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int32)
        )
        return cls(clip_ids, vocab, indptr, indices, segment_times)

    def __len__(self) -> int:
        return len(self.clip_ids)

    @property
    def total_labels(self) -> int:
        return int(self.indices.size)

    def row(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def row_mids(self, i: int) -> list[str]:
        mids = self.vocab.mids
        return [mids[c] for c in self.row(i)]

    def to_rows(self) -> list[list[int]]:
        return [self.row(i).tolist() for i in range(len(self))]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelMatrix):
            return NotImplemented
        if self.clip_ids != other.clip_ids or self.vocab != other.vocab:
            return False
        if not np.array_equal(self.indptr, other.indptr):
            return False
        if not np.array_equal(self.indices, other.indices):
            return False
        if (self.segment_times is None) != (other.segment_times is None):
            return False
        if self.segment_times is not None and not np.array_equal(
            self.segment_times, other.segment_times
        ):
            return False
        return True


class ScoreMatrix:
    """Dense clip-by-class float32 scores; all values finite."""

    def __init__(self, clip_ids, vocab: ClassVocabulary, scores):
        self.clip_ids: list[str] = list(clip_ids)
        self.vocab = vocab
        scores = np.asarray(scores, dtype=np.float32)
        if scores.shape != (len(self.clip_ids), len(vocab)):
            raise DimensionMismatch(
                f"score shape {scores.shape} does not match "
                f"{len(self.clip_ids)} clips x {len(vocab)} classes"
            )
        if not np.isfinite(scores).all():
            i, j = np.argwhere(~np.isfinite(scores))[0]
            raise NonFiniteValue(self.clip_ids[i], vocab.mids[j])
        self.scores = scores

    def __len__(self) -> int:
        return len(self.clip_ids)

    def column(self, mid: str) -> np.ndarray:
        return self.scores[:, self.vocab.mid_to_index[mid]]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScoreMatrix):
            return NotImplemented
        return (
            self.clip_ids == other.clip_ids
            and self.vocab.mids == other.vocab.mids
            and np.array_equal(self.scores, other.scores)
        )


# --- class-index CSV --------------------------------------------------------

def parse_class_index_csv(raw: bytes) -> ClassVocabulary:
    """Parse ``index,mid,display_name`` rows into a vocabulary."""
    text = raw.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader("class-index file is empty") from None
    if tuple(h.strip() for h in header) != CLASS_INDEX_HEADER:
        raise MissingHeader(
            f"expected header {','.join(CLASS_INDEX_HEADER)!r}, "
            f"got {','.join(header)!r}"
        )
    pairs = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise MalformedRow(line_no, f"expected 3 fields, got {len(row)}")
        try:
            index = int(row[0])
        except ValueError:
            raise MalformedRow(line_no, f"bad index {row[0]!r}") from None
        if index != len(pairs):
            raise NonContiguousIndices(
                f"line {line_no}: expected index {len(pairs)}, got {index}"
            )
        pairs.append((row[1], row[2]))
    return ClassVocabulary.from_pairs(pairs)


def write_class_index_csv(vocab: ClassVocabulary) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CLASS_INDEX_HEADER)
    for index, mid, name in vocab.entries:
        writer.writerow([index, mid, name])
    return buf.getvalue().encode("utf-8")


# --- segment CSV -------------------------------------------------------------

def parse_segments_csv(
    raw: bytes,
    vocab: ClassVocabulary,
    lenient: bool = False,
    dropped: Counter | None = None,
) -> LabelMatrix:
    """Parse AudioSet-style segment rows into a LabelMatrix.

    ``#`` comment lines are skipped. Unknown mids raise UnknownMid unless
    ``lenient`` is set, in which case they are dropped and counted into
    ``dropped`` (a Counter keyed by mid) when one is supplied.
    """
    text = raw.decode("utf-8")
    clip_ids: list[str] = []
    rows: list[list[int]] = []
    times: list[tuple[float, float]] = []
    index_of = vocab.mid_to_index

    lines = text.splitlines()
    line_nos: list[int] = []

    def data_lines():
        for i, line in enumerate(lines, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            line_nos.append(i)
            yield line

    # One shared csv.reader; line_nos[k] is filled by the time row k arrives.
    for k, parsed in enumerate(csv.reader(data_lines(), skipinitialspace=True)):
        line_no = line_nos[k]
        if len(parsed) != 4:
            raise MalformedRow(line_no, f"expected 4 fields, got {len(parsed)}")
        clip_id, start_s, end_s, label_field = parsed
        try:
            start, end = float(start_s), float(end_s)
        except ValueError:
            raise MalformedRow(line_no, "bad start/end seconds") from None
        row: set[int] = set()
        for mid in label_field.split(","):
            mid = mid.strip()
            if not mid:
                continue
            idx = index_of.get(mid)
            if idx is None:
                if not lenient:
                    raise UnknownMid(mid, clip_id)
                if dropped is not None:
                    dropped[mid] += 1
                continue
            row.add(idx)
        clip_ids.append(clip_id)
        rows.append(sorted(row))
        times.append((start, end))
    return LabelMatrix.from_rows(clip_ids, vocab, rows, segment_times=times)


def write_segments_csv(labels: LabelMatrix) -> bytes:
    """Emit the segment CSV dialect ``parse_segments_csv`` reads.

    Label lists are quoted, comma-joined mids in ascending vocabulary-index
    order; times come from ``segment_times``, defaulting to 0.000/10.000.
    Deterministic for a given matrix.
    """
    mids = labels.vocab.mids
    out = [
        "# Segments csv written by hlpkit",
        f"# num_ytids={len(labels)}, num_segs={len(labels)}, "
        f"num_unique_labels={len(np.unique(labels.indices))}, "
        f"num_positive_labels={labels.total_labels}",
    ]
    times = labels.segment_times
    for i, clip_id in enumerate(labels.clip_ids):
        start, end = (times[i] if times is not None else (0.0, 10.0))
        label_str = ",".join(mids[c] for c in labels.row(i))
        out.append(f'{clip_id}, {start:.3f}, {end:.3f}, "{label_str}"')
    return ("\n".join(out) + "\n").encode("utf-8")


# --- score matrices ----------------------------------------------------------

def _format_score(value: np.float32) -> str:
    # Shortest decimal string that round-trips the float32 exactly.
    return np.format_float_positional(value, unique=True, trim="-")


def write_scores(matrix: ScoreMatrix, fmt: str = "binary") -> bytes:
    """Serialize a score matrix as ``binary`` (HLPS) or ``csv``."""
    if fmt == "binary":
        parts = [HLPS_MAGIC, struct.pack("<II", len(matrix), len(matrix.vocab))]
        for mid in matrix.vocab.mids:
            encoded = mid.encode("utf-8")
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
        for clip_id in matrix.clip_ids:
            encoded = clip_id.encode("utf-8")
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
        parts.append(
            np.ascontiguousarray(matrix.scores, dtype="<f4").tobytes()
        )
        return b"".join(parts)
    if fmt == "csv":
        lines = ["clip_id," + ",".join(matrix.vocab.mids)]
        for i, clip_id in enumerate(matrix.clip_ids):
            values = ",".join(_format_score(v) for v in matrix.scores[i])
            lines.append(f"{clip_id},{values}" if values else clip_id)
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown score format {fmt!r}")


def read_scores(raw: bytes, fmt: str = "auto") -> ScoreMatrix:
    """Deserialize a score matrix; ``auto`` sniffs the HLPS magic."""
    if fmt == "auto":
        fmt = "binary" if raw.startswith(HLPS_MAGIC) else "csv"
    if fmt == "binary":
        return _read_scores_binary(raw)
    if fmt == "csv":
        return _read_scores_csv(raw)
    raise ValueError(f"unknown score format {fmt!r}")


def _read_scores_binary(raw: bytes) -> ScoreMatrix:
    if not raw.startswith(HLPS_MAGIC):
        raise BadMagic(f"expected magic {HLPS_MAGIC!r}")
    offset = len(HLPS_MAGIC)
    if len(raw) < offset + 8:
        raise DimensionMismatch("truncated HLPS header")
    n_clips, n_classes = struct.unpack_from("<II", raw, offset)
    offset += 8

    def read_strings(count: int, offset: int) -> tuple[list[str], int]:
        out = []
        for _ in range(count):
            if len(raw) < offset + 2:
                raise DimensionMismatch("truncated HLPS string block")
            (length,) = struct.unpack_from("<H", raw, offset)
            offset += 2
            if len(raw) < offset + length:
                raise DimensionMismatch("truncated HLPS string block")
            out.append(raw[offset:offset + length].decode("utf-8"))
            offset += length
        return out, offset

    mids, offset = read_strings(n_classes, offset)
    clip_ids, offset = read_strings(n_clips, offset)
    expected = n_clips * n_classes * 4
    if len(raw) - offset != expected:
        raise DimensionMismatch(
            f"payload is {len(raw) - offset} bytes, expected {expected}"
        )
    scores = np.frombuffer(raw, dtype="<f4", count=n_clips * n_classes,
                           offset=offset).reshape(n_clips, n_classes).copy()
    vocab = ClassVocabulary.from_pairs((mid, "") for mid in mids)
    return ScoreMatrix(clip_ids, vocab, scores)


def _read_scores_csv(raw: bytes) -> ScoreMatrix:
    text = raw.decode("utf-8")
    lines = text.splitlines()
    if not lines:
        raise MissingHeader("score CSV is empty")
    header = lines[0].split(",")
    if not header or header[0] != "clip_id":
        raise MissingHeader("score CSV must start with a 'clip_id,...' header")
    mids = header[1:]
    n_classes = len(mids)
    clip_ids: list[str] = []
    rows: list[np.ndarray] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != n_classes + 1:
            raise DimensionMismatch(
                f"line {line_no}: expected {n_classes + 1} fields, "
                f"got {len(fields)}"
            )
        clip_ids.append(fields[0])
        try:
            values = np.array(fields[1:], dtype=np.float64)
        except ValueError:
            raise MalformedRow(line_no, "bad float value") from None
        if not np.isfinite(values).all():
            j = int(np.argwhere(~np.isfinite(values))[0])
            raise NonFiniteValue(fields[0], mids[j])
        rows.append(values.astype(np.float32))
    scores = (
        np.vstack(rows) if rows else np.empty((0, n_classes), dtype=np.float32)
    )
    vocab = ClassVocabulary.from_pairs((mid, "") for mid in mids)
    return ScoreMatrix(clip_ids, vocab, scores)
