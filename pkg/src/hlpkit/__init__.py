"""hlpkit: hierarchical label propagation for ontology-structured datasets.

Propagates positive labels (and, by max, prediction scores) upward through
single-parent chains of a class ontology, quantifies the resulting label
changes, and evaluates predictions with class-wise mean average precision,
including across datasets that share part of a vocabulary.
"""

from . import errors
from .hlp import propagate_labels, propagate_scores
from .labelset import (
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
from .metrics import (
    EvalReport,
    average_precision,
    mean_average_precision,
    restrict_to_shared_vocab,
)
from .ontology import (
    OntologyGraph,
    OntologyNode,
    PropagationMap,
    TraversalPolicy,
    ValidationReport,
    build_propagation_map,
    parse_ontology,
    render_ontology_json,
    validate_ontology,
)
from .stats import HlpReport, diff_label_matrices, render_report, report_from_json
from .synth import SynthConfig, gen_labels, gen_ontology, gen_scores, oracle_propagate

__version__ = "0.1.0"

__all__ = [
    "ClassVocabulary",
    "EvalReport",
    "HlpReport",
    "LabelMatrix",
    "OntologyGraph",
    "OntologyNode",
    "PropagationMap",
    "ScoreMatrix",
    "SynthConfig",
    "TraversalPolicy",
    "ValidationReport",
    "average_precision",
    "build_propagation_map",
    "diff_label_matrices",
    "errors",
    "gen_labels",
    "gen_ontology",
    "gen_scores",
    "mean_average_precision",
    "oracle_propagate",
    "parse_class_index_csv",
    "parse_ontology",
    "parse_segments_csv",
    "propagate_labels",
    "propagate_scores",
    "read_scores",
    "render_ontology_json",
    "render_report",
    "report_from_json",
    "restrict_to_shared_vocab",
    "validate_ontology",
    "write_class_index_csv",
    "write_scores",
    "write_segments_csv",
]
