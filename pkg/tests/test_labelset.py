import struct
from collections import Counter

import numpy as np
import pytest

from hlpkit.errors import (
    BadMagic,
    DimensionMismatch,
    DuplicateMid,
    MalformedRow,
    MissingHeader,
    NonContiguousIndices,
    NonFiniteValue,
    UnknownMid,
)
from hlpkit.labelset import (
    HLPS_MAGIC,
    ClassVocabulary,
    LabelMatrix,
    ScoreMatrix,
    parse_class_index_csv,
    parse_segments_csv,
    read_scores,
    write_class_index_csv,
    write_segments_csv,
    write_scores,
)
from hlpkit.rng import uniform_f32_at, values_at

SPEECH_VOCAB = b'index,mid,display_name\n0,/m/09x0r,"Speech"\n'


class TestClassIndexCsv:
    def test_single_row(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        assert len(vocab) == 1
        assert vocab.mid_to_index["/m/09x0r"] == 0
        assert vocab.display_name("/m/09x0r") == "Speech"

    def test_quoted_name_with_comma(self):
        raw = b'index,mid,display_name\n0,/m/0jbk,Animal\n1,/m/068hy,"Domestic animals, pets"\n'
        vocab = parse_class_index_csv(raw)
        assert vocab.display_name("/m/068hy") == "Domestic animals, pets"

    def test_missing_header(self):
        with pytest.raises(MissingHeader):
            parse_class_index_csv(b"0,/m/09x0r,Speech\n")
        with pytest.raises(MissingHeader):
            parse_class_index_csv(b"")

    def test_non_contiguous_indices(self):
        raw = b"index,mid,display_name\n0,/a,A\n2,/b,B\n"
        with pytest.raises(NonContiguousIndices):
            parse_class_index_csv(raw)

    def test_duplicate_mid(self):
        raw = b"index,mid,display_name\n0,/a,A\n1,/a,B\n"
        with pytest.raises(DuplicateMid):
            parse_class_index_csv(raw)

    def test_write_round_trip(self):
        vocab = ClassVocabulary.from_pairs(
            [("/m/0jbk", "Animal"), ("/m/068hy", "Domestic animals, pets")]
        )
        assert parse_class_index_csv(write_class_index_csv(vocab)) == vocab


class TestSegmentsCsv:
    def test_basic_row(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        labels = parse_segments_csv(
            b'--aE2O5G5WE, 0.000, 10.000, "/m/09x0r"\n', vocab
        )
        assert labels.clip_ids == ["--aE2O5G5WE"]
        assert labels.to_rows() == [[0]]
        assert labels.segment_times[0].tolist() == [0.0, 10.0]

    def test_comment_lines_skipped(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        raw = (
            b"# Segments csv created Sun Mar  5 10:54:31 2017\n"
            b"# num_ytids=1, num_segs=1\n"
            b'--aE2O5G5WE, 0.000, 10.000, "/m/09x0r"\n'
        )
        labels = parse_segments_csv(raw, vocab)
        assert len(labels) == 1

    def test_multiple_labels_and_duplicates_collapse(self):
        vocab = ClassVocabulary.from_pairs([("/a", ""), ("/b", ""), ("/c", "")])
        labels = parse_segments_csv(b'x, 1.000, 2.000, "/c,/a,/c"\n', vocab)
        assert labels.to_rows() == [[0, 2]]

    def test_unknown_mid_strict(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        with pytest.raises(UnknownMid) as exc:
            parse_segments_csv(b'clipX, 0.000, 10.000, "/m/nope"\n', vocab)
        assert exc.value.mid == "/m/nope"
        assert exc.value.clip_id == "clipX"

    def test_unknown_mid_lenient_counts_drops(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        dropped = Counter()
        labels = parse_segments_csv(
            b'clipX, 0.000, 10.000, "/m/nope,/m/09x0r"\n'
            b'clipY, 0.000, 10.000, "/m/nope"\n',
            vocab,
            lenient=True,
            dropped=dropped,
        )
        assert labels.to_rows() == [[0], []]
        assert dropped == Counter({"/m/nope": 2})

    def test_malformed_row_reports_line(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        raw = b'# comment\nclipA, 0.000, 10.000, "/m/09x0r"\nbad row\n'
        with pytest.raises(MalformedRow) as exc:
            parse_segments_csv(raw, vocab)
        assert exc.value.line_no == 3

    def test_bad_times_report_line(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        with pytest.raises(MalformedRow):
            parse_segments_csv(b'clipA, zero, ten, "/m/09x0r"\n', vocab)

    def test_round_trip_preserves_data_row(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        row = b'--aE2O5G5WE, 0.000, 10.000, "/m/09x0r"'
        labels = parse_segments_csv(row + b"\n", vocab)
        out = write_segments_csv(labels)
        data_lines = [
            l for l in out.decode().splitlines() if not l.startswith("#")
        ]
        assert data_lines == [row.decode()]

    def test_empty_matrix_writes_comments_only(self):
        vocab = parse_class_index_csv(SPEECH_VOCAB)
        empty = LabelMatrix.from_rows([], vocab, [])
        out = write_segments_csv(empty).decode()
        assert out
        assert all(line.startswith("#") for line in out.splitlines())

    def test_parse_write_identity_random(self):
        # 1000 random clips over 20 classes, times on a millisecond grid
        vocab = ClassVocabulary.from_pairs(
            (f"/m/{i:04d}", f"class {i}") for i in range(20)
        )
        n = 1000
        u = values_at(3, 0, n * 20).reshape(n, 20)
        rows = [np.nonzero(u[i] < np.uint64(1 << 62))[0].tolist() for i in range(n)]
        starts = (values_at(4, 0, n) % np.uint64(600_000)).astype(np.int64)
        times = [(s / 1000.0, s / 1000.0 + 10.0) for s in starts]
        labels = LabelMatrix.from_rows(
            [f"yt{i:07d}" for i in range(n)], vocab, rows, segment_times=times
        )
        again = parse_segments_csv(write_segments_csv(labels), vocab)
        assert again == labels
        # and the serialized form is stable
        assert write_segments_csv(again) == write_segments_csv(labels)


class TestScoreMatrix:
    def test_rejects_nan(self):
        vocab = ClassVocabulary.from_pairs([("/a", ""), ("/b", "")])
        with pytest.raises(NonFiniteValue) as exc:
            ScoreMatrix(["c1"], vocab, [[0.5, float("nan")]])
        assert exc.value.clip == "c1"
        assert exc.value.cls == "/b"

    def test_rejects_inf(self):
        vocab = ClassVocabulary.from_pairs([("/a", "")])
        with pytest.raises(NonFiniteValue):
            ScoreMatrix(["c1"], vocab, [[float("inf")]])

    def test_shape_check(self):
        vocab = ClassVocabulary.from_pairs([("/a", "")])
        with pytest.raises(DimensionMismatch):
            ScoreMatrix(["c1", "c2"], vocab, [[0.5]])


class TestScoreCsv:
    def test_formatting(self):
        vocab = ClassVocabulary.from_pairs([("/a", ""), ("/b", "")])
        matrix = ScoreMatrix(["clipA"], vocab, [[0.5, -1.25]])
        assert write_scores(matrix, "csv") == b"clip_id,/a,/b\nclipA,0.5,-1.25\n"

    def test_round_trip(self):
        vocab = ClassVocabulary.from_pairs((f"/c{i}", "") for i in range(7))
        scores = uniform_f32_at(99, 0, 5 * 7).reshape(5, 7) * 20.0 - 10.0
        matrix = ScoreMatrix([f"clip{i}" for i in range(5)], vocab, scores)
        again = read_scores(write_scores(matrix, "csv"), "csv")
        assert again == matrix

    def test_nan_rejected_on_read(self):
        with pytest.raises(NonFiniteValue):
            read_scores(b"clip_id,/a\nc1,nan\n", "csv")

    def test_missing_header(self):
        with pytest.raises(MissingHeader):
            read_scores(b"c1,0.5\n", "csv")

    def test_ragged_row(self):
        with pytest.raises(DimensionMismatch):
            read_scores(b"clip_id,/a,/b\nc1,0.5\n", "csv")


class TestHlpsBinary:
    def test_layout(self):
        vocab = ClassVocabulary.from_pairs([("/a", ""), ("/bb", "")])
        matrix = ScoreMatrix(["c1"], vocab, [[1.5, -2.0]])
        blob = write_scores(matrix, "binary")
        assert blob.startswith(HLPS_MAGIC)
        n, c = struct.unpack_from("<II", blob, 8)
        assert (n, c) == (1, 2)
        # vocab block: '/a' then '/bb'
        assert blob[16:18] == struct.pack("<H", 2)
        assert blob[18:20] == b"/a"
        assert blob[20:22] == struct.pack("<H", 3)
        assert blob[22:25] == b"/bb"
        # clip block then payload
        assert blob[25:27] == struct.pack("<H", 2)
        assert blob[27:29] == b"c1"
        assert blob[29:] == np.array([1.5, -2.0], dtype="<f4").tobytes()

    def test_round_trip_is_byte_identical(self):
        vocab = ClassVocabulary.from_pairs((f"/m/{i:03d}", "") for i in range(527))
        scores = uniform_f32_at(11, 0, 100 * 527).reshape(100, 527)
        matrix = ScoreMatrix([f"clip{i:05d}" for i in range(100)], vocab, scores)
        blob = write_scores(matrix, "binary")
        again = read_scores(blob, "binary")
        assert again == matrix
        assert write_scores(again, "binary") == blob

    def test_bad_magic(self):
        with pytest.raises(BadMagic):
            read_scores(b"NOTMAGIC" + b"\x00" * 32, "binary")

    def test_truncated_payload(self):
        vocab = ClassVocabulary.from_pairs([("/a", "")])
        blob = write_scores(ScoreMatrix(["c1"], vocab, [[1.0]]), "binary")
        with pytest.raises(DimensionMismatch):
            read_scores(blob[:-2], "binary")

    def test_auto_sniffs_magic(self):
        vocab = ClassVocabulary.from_pairs([("/a", "")])
        matrix = ScoreMatrix(["c1"], vocab, [[1.0]])
        assert read_scores(write_scores(matrix, "binary")) == matrix
        assert read_scores(write_scores(matrix, "csv")) == matrix
