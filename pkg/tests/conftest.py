import pytest

from hlpkit.labelset import ClassVocabulary, LabelMatrix
from hlpkit.ontology import OntologyNode, build_graph

# A small taxonomy with one multi-parent leaf:
#
#   Animal -> Domestic animal -> {Cat, Dog} -> Growling
#
# Growling hangs under both Cat and Dog, so a positive Growling cannot
# be attributed to either parent (sibling ambiguity); everything else is a
# single-parent chain. Mids follow the AudioSet ontology.

ANIMAL = "/m/0jbk"
DOMESTIC = "/m/068hy"
CAT = "/m/01yrx"
DOG = "/m/0bt9lr"
GROWLING = "/m/0ghcn6"


def taxonomy_nodes():
    return [
        OntologyNode(ANIMAL, "Animal", (DOMESTIC,)),
        OntologyNode(DOMESTIC, "Domestic animals, pets", (CAT, DOG)),
        OntologyNode(CAT, "Cat", (GROWLING,)),
        OntologyNode(DOG, "Dog", (GROWLING,)),
        OntologyNode(GROWLING, "Growling", ()),
    ]


@pytest.fixture
def taxonomy():
    return build_graph(taxonomy_nodes())


@pytest.fixture
def taxonomy_vocab():
    return ClassVocabulary.from_pairs(
        (n.mid, n.display_name) for n in taxonomy_nodes()
    )


def label_matrix(vocab, rows_by_mids, clip_ids=None):
    """Build a LabelMatrix from per-clip mid lists."""
    if clip_ids is None:
        clip_ids = [f"clip{i}" for i in range(len(rows_by_mids))]
    rows = [
        [vocab.mid_to_index[mid] for mid in row] for row in rows_by_mids
    ]
    return LabelMatrix.from_rows(clip_ids, vocab, rows)
