import json

import pytest

from hlpkit.errors import (
    CycleDetected,
    DuplicateMid,
    MalformedJson,
    UnknownChild,
    UnknownVocabMid,
)
from hlpkit.labelset import ClassVocabulary
from hlpkit.ontology import (
    OntologyNode,
    TraversalPolicy,
    build_graph,
    build_propagation_map,
    parse_ontology,
    render_ontology_json,
    validate_ontology,
)

from conftest import ANIMAL, CAT, DOG, DOMESTIC, GROWLING, taxonomy_nodes


def as_json(entries) -> bytes:
    return json.dumps(entries).encode("utf-8")


class TestParseOntology:
    def test_single_node(self):
        graph = parse_ontology(
            as_json([{"id": "/a", "name": "A", "child_ids": [], "restrictions": []}])
        )
        assert len(graph) == 1
        assert graph.nodes["/a"].display_name == "A"
        assert graph.parent_index["/a"] == ()

    def test_restrictions_map_to_flags(self):
        graph = parse_ontology(
            as_json(
                [
                    {"id": "/a", "name": "A", "child_ids": [],
                     "restrictions": ["abstract"]},
                    {"id": "/b", "name": "B", "child_ids": [],
                     "restrictions": ["blacklist"]},
                    {"id": "/c", "name": "C", "child_ids": [], "restrictions": []},
                ]
            )
        )
        assert graph.nodes["/a"].is_abstract and not graph.nodes["/a"].is_blacklisted
        assert graph.nodes["/b"].is_blacklisted and not graph.nodes["/b"].is_abstract
        assert not graph.nodes["/c"].is_abstract

    def test_unknown_json_fields_ignored(self):
        graph = parse_ontology(
            as_json(
                [{"id": "/a", "name": "A", "child_ids": [], "restrictions": [],
                  "description": "x", "citation_uri": "y", "examples": [1]}]
            )
        )
        assert len(graph) == 1

    def test_missing_optional_fields_default(self):
        graph = parse_ontology(as_json([{"id": "/a"}]))
        node = graph.nodes["/a"]
        assert node.display_name == ""
        assert node.child_mids == ()

    def test_two_node_cycle(self):
        payload = as_json(
            [
                {"id": "/a", "name": "A", "child_ids": ["/b"], "restrictions": []},
                {"id": "/b", "name": "B", "child_ids": ["/a"], "restrictions": []},
            ]
        )
        with pytest.raises(CycleDetected) as exc:
            parse_ontology(payload)
        cycle = exc.value.cycle
        assert sorted(cycle) == ["/a", "/b"]

    def test_self_loop(self):
        with pytest.raises(CycleDetected) as exc:
            parse_ontology(as_json([{"id": "/a", "child_ids": ["/a"]}]))
        assert exc.value.cycle == ["/a"]

    def test_duplicate_mid(self):
        with pytest.raises(DuplicateMid) as exc:
            parse_ontology(as_json([{"id": "/a"}, {"id": "/a"}]))
        assert exc.value.mid == "/a"

    def test_unknown_child(self):
        with pytest.raises(UnknownChild) as exc:
            parse_ontology(as_json([{"id": "/a", "child_ids": ["/missing"]}]))
        assert exc.value.parent_mid == "/a"
        assert exc.value.child_mid == "/missing"

    @pytest.mark.parametrize(
        "raw",
        [
            b"not json",
            b"\xff\xfe garbage",
            b'{"id": "/a"}',  # object, not array
            b'[{"name": "no id"}]',
            b'[{"id": "/a", "child_ids": "not-a-list"}]',
        ],
    )
    def test_malformed_inputs(self, raw):
        with pytest.raises(MalformedJson):
            parse_ontology(raw)

    def test_duplicate_edge_collapsed_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            graph = parse_ontology(
                as_json(
                    [
                        {"id": "/a", "child_ids": ["/b", "/b"]},
                        {"id": "/b", "child_ids": []},
                    ]
                )
            )
        assert graph.nodes["/a"].child_mids == ("/b",)
        assert graph.parent_index["/b"] == ("/a",)
        assert any("duplicate edge" in r.message for r in caplog.records)

    def test_parse_is_deterministic(self):
        raw = render_ontology_json(build_graph(taxonomy_nodes()))
        g1 = parse_ontology(raw)
        g2 = parse_ontology(raw)
        assert g1.child_first_order == g2.child_first_order
        assert g1.nodes == g2.nodes
        assert g1.parent_index == g2.parent_index

    def test_json_round_trip(self):
        graph = build_graph(taxonomy_nodes())
        again = parse_ontology(render_ontology_json(graph))
        assert again.nodes == graph.nodes


class TestChildFirstOrder:
    def test_descendants_precede_ancestors(self, taxonomy):
        position = {mid: i for i, mid in enumerate(taxonomy.child_first_order)}
        for node in taxonomy.nodes.values():
            for child in node.child_mids:
                assert position[child] < position[node.mid]

    def test_covers_every_node_once(self, taxonomy):
        assert sorted(taxonomy.child_first_order) == sorted(taxonomy.nodes)

    def test_ties_broken_by_mid_order(self):
        # two independent leaves: order must be ascending by mid
        graph = build_graph([OntologyNode("/z", "", ()), OntologyNode("/a", "", ())])
        assert graph.child_first_order == ("/a", "/z")


class TestPropagationMap:
    def test_multi_parent_chain_is_empty(self, taxonomy):
        pmap = build_propagation_map(taxonomy)
        assert pmap.chains[GROWLING] == ()

    def test_root_child_chain(self, taxonomy):
        pmap = build_propagation_map(taxonomy)
        assert pmap.chains[DOMESTIC] == (ANIMAL,)
        assert pmap.chains[ANIMAL] == ()

    def test_chain_recurrence(self, taxonomy):
        pmap = build_propagation_map(taxonomy)
        assert pmap.chains[CAT] == (DOMESTIC, ANIMAL)
        assert pmap.chains[DOG] == (DOMESTIC, ANIMAL)

    def test_linear_chain(self):
        graph = build_graph(
            [
                OntologyNode("/a", "", ("/b",)),
                OntologyNode("/b", "", ("/c",)),
                OntologyNode("/c", "", ()),
            ]
        )
        pmap = build_propagation_map(graph)
        assert pmap.chains["/c"] == ("/b", "/a")

    def test_labelable_only_requires_vocab(self, taxonomy):
        with pytest.raises(ValueError):
            build_propagation_map(taxonomy, TraversalPolicy.LABELABLE_ONLY)

    def test_labelable_only_unknown_vocab_mid(self, taxonomy):
        vocab = ClassVocabulary.from_pairs([("/nope", "")])
        with pytest.raises(UnknownVocabMid):
            build_propagation_map(taxonomy, TraversalPolicy.LABELABLE_ONLY, vocab)

    def test_labelable_only_terminates_at_excluded_node(self):
        # /a -> /b -> /c with /b outside the vocabulary: /c's chain stops
        # short (no /b, and /a is unreachable because traversal stops too).
        graph = build_graph(
            [
                OntologyNode("/a", "", ("/b",)),
                OntologyNode("/b", "", ("/c",)),
                OntologyNode("/c", "", ()),
            ]
        )
        vocab = ClassVocabulary.from_pairs([("/a", ""), ("/c", "")])
        pmap = build_propagation_map(
            graph, TraversalPolicy.LABELABLE_ONLY, vocab
        )
        assert pmap.chains["/c"] == ()
        assert pmap.chains["/b"] == ("/a",)

    def test_through_all_passes_abstract_nodes(self):
        graph = build_graph(
            [
                OntologyNode("/root", "", ("/mid",)),
                OntologyNode("/mid", "", ("/leaf",), is_abstract=True),
                OntologyNode("/leaf", "", ()),
            ]
        )
        pmap = build_propagation_map(graph, TraversalPolicy.THROUGH_ALL)
        assert pmap.chains["/leaf"] == ("/mid", "/root")


class TestValidate:
    def test_empty_graph(self):
        report = validate_ontology(build_graph([]))
        assert report.node_count == 0
        assert report.edge_count == 0
        assert report.root_count == 0
        assert report.max_depth == 0

    def test_taxonomy_counts(self, taxonomy):
        report = validate_ontology(taxonomy)
        assert report.node_count == 5
        assert report.edge_count == 5
        assert report.root_count == 1
        assert report.multi_parent_count == 1  # Growling
        assert report.max_depth == 3

    def test_flag_counts(self):
        graph = parse_ontology(
            as_json(
                [
                    {"id": "/a", "restrictions": ["abstract"]},
                    {"id": "/b", "restrictions": ["blacklist"]},
                    {"id": "/c", "restrictions": ["abstract", "blacklist"]},
                ]
            )
        )
        report = validate_ontology(graph)
        assert report.abstract_count == 2
        assert report.blacklisted_count == 2
        assert report.root_count == 3

    def test_text_rendering(self, taxonomy):
        text = validate_ontology(taxonomy).to_text()
        assert "Nodes: 5" in text
        assert "Multi-parent nodes: 1" in text
