"""Command-line interface.

Exit codes: 0 on success, 1 on usage errors (unknown flags, missing
arguments), 2 on data or validation errors (the message names the offending
file, line or mid). All file output is written atomically (temp file plus
rename) and is byte-identical for equal inputs and flags, independent of
``--threads``.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from collections import Counter

from .errors import HlpError
from .hlp import propagate_labels, propagate_scores
from .labelset import (
    parse_class_index_csv,
    parse_segments_csv,
    read_scores,
    write_class_index_csv,
    write_segments_csv,
    write_scores,
)
from .metrics import mean_average_precision, restrict_to_shared_vocab
from .ontology import (
    TraversalPolicy,
    build_propagation_map,
    parse_ontology,
    render_ontology_json,
    validate_ontology,
)
from .stats import diff_label_matrices, render_report
from .synth import SynthConfig, gen_labels, gen_ontology, gen_scores


class _UsageExit(Exception):
    def __init__(self, message: str):
        self.message = message


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via exit code 1."""

    def error(self, message):
        raise _UsageExit(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _read(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _write_atomic(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hlpkit-tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default_threads() -> int:
    env = os.environ.get("HLP_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _add_threads_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--threads", type=int, default=_default_threads(), metavar="N",
        help="worker threads for row processing (default: $HLP_THREADS or 1); "
             "output bytes do not depend on N",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hlpkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="summarize an ontology JSON file")
    p.add_argument("--ontology", required=True, metavar="FILE")

    p = sub.add_parser(
        "propagate-labels",
        help="propagate positive labels up single-parent ontology chains",
    )
    p.add_argument("--ontology", required=True, metavar="FILE")
    p.add_argument("--class-index", required=True, metavar="FILE")
    p.add_argument("--in", dest="input", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument(
        "--policy", choices=[t.value for t in TraversalPolicy],
        default=TraversalPolicy.THROUGH_ALL.value,
        help="whether chains may pass through classes outside the vocabulary",
    )
    p.add_argument(
        "--lenient", action="store_true",
        help="drop (and count) label mids missing from the class index "
             "instead of failing",
    )
    _add_threads_flag(p)

    p = sub.add_parser(
        "propagate-scores",
        help="push prediction scores upward by max along single-parent edges",
    )
    p.add_argument("--ontology", required=True, metavar="FILE")
    p.add_argument("--in", dest="input", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument(
        "--in-format", choices=["auto", "csv", "hlps"], default="auto"
    )
    p.add_argument(
        "--out-format", choices=["auto", "csv", "hlps"], default="auto",
        help="default: by --out extension (.csv is csv, otherwise hlps)",
    )
    _add_threads_flag(p)

    p = sub.add_parser(
        "stats", help="diff two segment CSVs and report label changes"
    )
    p.add_argument("--before", required=True, metavar="CSV")
    p.add_argument("--after", required=True, metavar="CSV")
    p.add_argument("--class-index", required=True, metavar="FILE")
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p.add_argument(
        "--figure", metavar="FILE",
        help="also render a per-class change chart (png/svg/pdf by extension)",
    )

    p = sub.add_parser(
        "eval", help="mean average precision of scores against labels"
    )
    p.add_argument("--scores", required=True, metavar="FILE")
    p.add_argument("--labels", required=True, metavar="CSV")
    p.add_argument("--class-index", required=True, metavar="FILE")
    p.add_argument(
        "--subset-class-index", metavar="FILE",
        help="restrict evaluation to this vocabulary (e.g. classes shared "
             "between two datasets)",
    )
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p.add_argument(
        "--figure", metavar="FILE", help="also render a per-class AP histogram"
    )

    p = sub.add_parser(
        "shared-classes",
        help="intersect two class-index files into a shared vocabulary",
    )
    p.add_argument("--a", required=True, metavar="FILE")
    p.add_argument("--b", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="FILE")

    p = sub.add_parser(
        "synth", help="write seeded synthetic fixture files to a directory"
    )
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--nodes", type=int, default=50)
    p.add_argument("--max-children", type=int, default=4)
    p.add_argument("--multi-parent-prob", type=float, default=0.0)
    p.add_argument("--clips", type=int, default=100)
    p.add_argument("--density", type=float, default=2.0)
    p.add_argument("--out", required=True, metavar="DIR")

    return parser


def _cmd_validate(args) -> int:
    graph = parse_ontology(_read(args.ontology))
    print(validate_ontology(graph).to_text())
    return 0


def _cmd_propagate_labels(args) -> int:
    graph = parse_ontology(_read(args.ontology))
    vocab = parse_class_index_csv(_read(args.class_index))
    policy = TraversalPolicy(args.policy)
    pmap = build_propagation_map(
        graph, policy,
        vocab=vocab if policy is TraversalPolicy.LABELABLE_ONLY else None,
    )
    dropped: Counter = Counter()
    labels = parse_segments_csv(
        _read(args.input), vocab, lenient=args.lenient, dropped=dropped
    )
    if dropped:
        total = sum(dropped.values())
        print(
            f"warning: dropped {total} labels over {len(dropped)} unknown "
            f"mids from {args.input}",
            file=sys.stderr,
        )
    result = propagate_labels(labels, pmap, vocab, threads=args.threads)
    _write_atomic(args.out, write_segments_csv(result))
    return 0


def _score_format(path: str, flag: str) -> str:
    if flag == "auto":
        flag = "csv" if path.lower().endswith(".csv") else "hlps"
    return "binary" if flag == "hlps" else flag


def _cmd_propagate_scores(args) -> int:
    graph = parse_ontology(_read(args.ontology))
    in_fmt = "auto" if args.in_format == "auto" else _score_format("", args.in_format)
    scores = read_scores(_read(args.input), fmt=in_fmt)
    result = propagate_scores(scores, graph, threads=args.threads)
    _write_atomic(
        args.out, write_scores(result, _score_format(args.out, args.out_format))
    )
    return 0


def _emit(data: bytes, out_path: str | None) -> None:
    if out_path:
        _write_atomic(out_path, data)
    else:
        sys.stdout.write(data.decode("utf-8"))


def _cmd_stats(args) -> int:
    vocab = parse_class_index_csv(_read(args.class_index))
    before = parse_segments_csv(_read(args.before), vocab)
    after = parse_segments_csv(_read(args.after), vocab)
    report = diff_label_matrices(before, after)
    _emit(render_report(report, args.format), args.out)
    if args.figure:
        from . import figures  # deferred: pulls in matplotlib

        figures.render_stats_figure(report, args.figure)
    return 0


def _cmd_eval(args) -> int:
    vocab = parse_class_index_csv(_read(args.class_index))
    scores = read_scores(_read(args.scores))
    labels = parse_segments_csv(_read(args.labels), vocab)
    subset = None
    if args.subset_class_index:
        subset = parse_class_index_csv(_read(args.subset_class_index))
    report = mean_average_precision(scores, labels, class_subset=subset)
    if args.format == "json":
        _emit(report.to_json_bytes(), args.out)
    else:
        _emit((report.to_text() + "\n").encode("utf-8"), args.out)
    if args.figure:
        from . import figures  # deferred: pulls in matplotlib

        figures.render_eval_figure(report, args.figure)
    return 0


def _cmd_shared_classes(args) -> int:
    vocab_a = parse_class_index_csv(_read(args.a))
    vocab_b = parse_class_index_csv(_read(args.b))
    shared = restrict_to_shared_vocab(vocab_a, vocab_b)
    _write_atomic(args.out, write_class_index_csv(shared))
    print(f"{len(shared)} shared classes written to {args.out}")
    return 0


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        seed=args.seed,
        n_nodes=args.nodes,
        max_children=args.max_children,
        multi_parent_prob=args.multi_parent_prob,
        n_clips=args.clips,
        label_density=args.density,
    )
    graph = gen_ontology(cfg)
    labels = gen_labels(cfg, graph)
    scores = gen_scores(cfg, graph)
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(
        os.path.join(args.out, "ontology.json"), render_ontology_json(graph)
    )
    _write_atomic(
        os.path.join(args.out, "class_index.csv"),
        write_class_index_csv(labels.vocab),
    )
    _write_atomic(
        os.path.join(args.out, "segments.csv"), write_segments_csv(labels)
    )
    _write_atomic(
        os.path.join(args.out, "scores.hlps"), write_scores(scores, "binary")
    )
    print(f"fixture files written to {args.out}")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "propagate-labels": _cmd_propagate_labels,
    "propagate-scores": _cmd_propagate_scores,
    "stats": _cmd_stats,
    "eval": _cmd_eval,
    "shared-classes": _cmd_shared_classes,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageExit as exc:
        print(exc.message, file=sys.stderr, end="")
        return 1
    try:
        return _COMMANDS[args.command](args)
    except HlpError as exc:
        print(f"hlpkit: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hlpkit: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"hlpkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
