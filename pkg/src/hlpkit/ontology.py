"""Ontology graph parsing and upward-propagation structure.

Ingests AudioSet-style ontology JSON (an array of objects with ``id``,
``name``, ``child_ids`` and ``restrictions`` fields), validates it into an
immutable DAG, and precomputes per-node single-parent ancestor chains: the
class set a positive label propagates to when it is moved up the hierarchy.

A node with zero or several parents blocks upward propagation (its chain is
empty); a node with exactly one parent chains through that parent
recursively. Multi-parent nodes are where sibling ambiguity lives: a child
shared by two parents cannot tell which parent caused it, so neither parent
is inferred.
"""

from __future__ import annotations

import enum
import heapq
import json
import logging
from dataclasses import dataclass, field
from typing import Iterator

from .errors import (
    CycleDetected,
    DuplicateMid,
    MalformedJson,
    UnknownChild,
    UnknownVocabMid,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OntologyNode:
    mid: str
    display_name: str
    child_mids: tuple[str, ...]
    is_abstract: bool = False
    is_blacklisted: bool = False


class TraversalPolicy(enum.Enum):
    """Which nodes a propagation chain may pass through.

    THROUGH_ALL walks the full ontology; restriction to a labelable
    vocabulary happens downstream, at label-emission time. LABELABLE_ONLY
    terminates a chain at the first node outside the given vocabulary (the
    node is neither added to the chain nor traversed through).
    """

    THROUGH_ALL = "through-all"
    LABELABLE_ONLY = "labelable-only"


@dataclass(frozen=True)
class OntologyGraph:
    """Validated DAG over ontology nodes.

    ``parent_index`` is the exact inverse of the child edges and
    ``child_first_order`` lists every node after all of its descendants
    (deterministic: ties broken by ascending mid byte order).
    """

    nodes: dict[str, OntologyNode]
    parent_index: dict[str, tuple[str, ...]]
    child_first_order: tuple[str, ...]

    def __contains__(self, mid: str) -> bool:
        return mid in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def parents(self, mid: str) -> tuple[str, ...]:
        return self.parent_index[mid]

    def single_parent(self, mid: str) -> str | None:
        """The unique parent of ``mid``, or None if it has 0 or >1 parents."""
        parents = self.parent_index[mid]
        return parents[0] if len(parents) == 1 else None


@dataclass(frozen=True)
class PropagationMap:
    """Per-node ordered ancestor chain under the single-parent rule.

    ``chains[c]`` is empty unless ``c`` has exactly one parent ``p``, in
    which case it is ``(p,) + chains[p]`` (possibly truncated by the
    traversal policy). Chains are duplicate-free because the graph is
    acyclic.
    """

    chains: dict[str, tuple[str, ...]]
    policy: TraversalPolicy
    mids: frozenset[str] = field(repr=False)

    def __contains__(self, mid: str) -> bool:
        return mid in self.chains


@dataclass(frozen=True)
class ValidationReport:
    node_count: int
    edge_count: int
    root_count: int
    abstract_count: int
    blacklisted_count: int
    multi_parent_count: int
    max_depth: int

    def to_text(self) -> str:
        return "\n".join(
            [
                f"Nodes: {self.node_count}",
                f"Edges: {self.edge_count}",
                f"Roots: {self.root_count}",
                f"Abstract: {self.abstract_count}",
                f"Blacklisted: {self.blacklisted_count}",
                f"Multi-parent nodes: {self.multi_parent_count}",
                f"Max depth: {self.max_depth}",
            ]
        )


def build_graph(nodes: list[OntologyNode]) -> OntologyGraph:
    """Validate a node list into an OntologyGraph.

    Raises DuplicateMid, UnknownChild or CycleDetected. Duplicate child
    entries on a single node are collapsed with a warning.
    """
    node_map: dict[str, OntologyNode] = {}
    for node in nodes:
        if node.mid in node_map:
            raise DuplicateMid(node.mid, "ontology")
        node_map[node.mid] = node

    deduped: dict[str, OntologyNode] = {}
    for node in node_map.values():
        seen: set[str] = set()
        children: list[str] = []
        for child in node.child_mids:
            if child not in node_map:
                raise UnknownChild(node.mid, child)
            if child in seen:
                logger.warning(
                    "collapsing duplicate edge %s -> %s", node.mid, child
                )
                continue
            seen.add(child)
            children.append(child)
        if len(children) != len(node.child_mids):
            node = OntologyNode(
                mid=node.mid,
                display_name=node.display_name,
                child_mids=tuple(children),
                is_abstract=node.is_abstract,
                is_blacklisted=node.is_blacklisted,
            )
        deduped[node.mid] = node

    parent_lists: dict[str, list[str]] = {mid: [] for mid in deduped}
    for node in deduped.values():
        for child in node.child_mids:
            parent_lists[child].append(node.mid)

    order = _child_first_order(deduped)
    if len(order) != len(deduped):
        raise CycleDetected(_find_cycle(deduped, set(order)))

    return OntologyGraph(
        nodes=deduped,
        parent_index={mid: tuple(parents) for mid, parents in parent_lists.items()},
        child_first_order=tuple(order),
    )


def _child_first_order(nodes: dict[str, OntologyNode]) -> list[str]:
    # Kahn's algorithm over child edges: a node becomes ready once all of
    # its children are emitted, so descendants always precede ancestors.
    # A heap keyed on mid makes the order unique.
    remaining = {mid: len(node.child_mids) for mid, node in nodes.items()}
    parents_of: dict[str, list[str]] = {mid: [] for mid in nodes}
    for mid, node in nodes.items():
        for child in node.child_mids:
            parents_of[child].append(mid)
    ready = [mid for mid, n in remaining.items() if n == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        mid = heapq.heappop(ready)
        order.append(mid)
        for parent in parents_of[mid]:
            remaining[parent] -= 1
            if remaining[parent] == 0:
                heapq.heappush(ready, parent)
    return order


def _find_cycle(nodes: dict[str, OntologyNode], placed: set[str]) -> list[str]:
    """Return one witness cycle among the nodes not in topological order."""
    stuck = [mid for mid in nodes if mid not in placed]
    on_path: dict[str, int] = {}
    path: list[str] = []
    visited: set[str] = set()
    for start in stuck:
        if start in visited:
            continue
        stack: list[tuple[str, Iterator[str]]] = [
            (start, iter(nodes[start].child_mids))
        ]
        on_path[start] = 0
        path.append(start)
        while stack:
            mid, children = stack[-1]
            advanced = False
            for child in children:
                if child in on_path:
                    return path[on_path[child]:]
                if child in visited or child in placed:
                    continue
                on_path[child] = len(path)
                path.append(child)
                stack.append((child, iter(nodes[child].child_mids)))
                advanced = True
                break
            if not advanced:
                stack.pop()
                visited.add(mid)
                path.pop()
                del on_path[mid]
    raise AssertionError("no cycle found among unordered nodes")


def parse_ontology(raw: bytes) -> OntologyGraph:
    """Parse ontology JSON bytes into a validated graph.

    Recognized fields per entry: ``id`` (required), ``name``, ``child_ids``,
    ``restrictions`` (values "abstract" and "blacklist" map to node flags).
    All other fields are ignored.
    """
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedJson(f"ontology is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(data, list):
        raise MalformedJson("ontology JSON must be an array of node objects")

    nodes: list[OntologyNode] = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict) or "id" not in entry:
            raise MalformedJson(f"ontology entry {i} is not an object with an 'id'")
        mid = entry["id"]
        if not isinstance(mid, str) or not mid:
            raise MalformedJson(f"ontology entry {i} has a non-string or empty 'id'")
        child_ids = entry.get("child_ids", [])
        if not isinstance(child_ids, list) or not all(
            isinstance(c, str) for c in child_ids
        ):
            raise MalformedJson(f"node {mid!r} has a malformed 'child_ids' field")
        restrictions = entry.get("restrictions", [])
        if not isinstance(restrictions, list):
            raise MalformedJson(f"node {mid!r} has a malformed 'restrictions' field")
        nodes.append(
            OntologyNode(
                mid=mid,
                display_name=str(entry.get("name", "")),
                child_mids=tuple(child_ids),
                is_abstract="abstract" in restrictions,
                is_blacklisted="blacklist" in restrictions,
            )
        )
    return build_graph(nodes)


def render_ontology_json(graph: OntologyGraph) -> bytes:
    """Serialize a graph back to the ontology JSON format (deterministic)."""
    entries = []
    for node in graph.nodes.values():
        restrictions = []
        if node.is_abstract:
            restrictions.append("abstract")
        if node.is_blacklisted:
            restrictions.append("blacklist")
        entries.append(
            {
                "id": node.mid,
                "name": node.display_name,
                "child_ids": list(node.child_mids),
                "restrictions": restrictions,
            }
        )
    return (json.dumps(entries, indent=2) + "\n").encode("utf-8")


def build_propagation_map(
    graph: OntologyGraph,
    policy: TraversalPolicy = TraversalPolicy.THROUGH_ALL,
    vocab=None,
) -> PropagationMap:
    """Precompute single-parent ancestor chains for every node.

    Under LABELABLE_ONLY, ``vocab`` (a ClassVocabulary or iterable of mids)
    is required; a parent outside it terminates the chain and is not
    traversed through.
    """
    allowed: frozenset[str] | None = None
    if policy is TraversalPolicy.LABELABLE_ONLY:
        if vocab is None:
            raise ValueError("labelable-only traversal requires a vocabulary")
        mids = getattr(vocab, "mids", vocab)
        allowed = frozenset(mids)
        for mid in allowed:
            if mid not in graph.nodes:
                raise UnknownVocabMid(mid)

    chains: dict[str, tuple[str, ...]] = {}
    # Ancestor-first order: a node's unique parent is already resolved when
    # the node is reached.
    for mid in reversed(graph.child_first_order):
        parent = graph.single_parent(mid)
        if parent is None:
            chains[mid] = ()
        elif allowed is not None and parent not in allowed:
            chains[mid] = ()
        else:
            chains[mid] = (parent,) + chains[parent]
    return PropagationMap(
        chains=chains, policy=policy, mids=frozenset(graph.nodes)
    )


def validate_ontology(graph: OntologyGraph) -> ValidationReport:
    """Summarize structural facts about a graph without mutating it."""
    edge_count = sum(len(node.child_mids) for node in graph.nodes.values())
    root_count = sum(1 for p in graph.parent_index.values() if not p)
    multi_parent = sum(1 for p in graph.parent_index.values() if len(p) > 1)

    depth: dict[str, int] = {}
    max_depth = 0
    for mid in reversed(graph.child_first_order):
        parents = graph.parent_index[mid]
        depth[mid] = max((depth[p] for p in parents), default=-1) + 1
        max_depth = max(max_depth, depth[mid])

    return ValidationReport(
        node_count=len(graph.nodes),
        edge_count=edge_count,
        root_count=root_count,
        abstract_count=sum(1 for n in graph.nodes.values() if n.is_abstract),
        blacklisted_count=sum(1 for n in graph.nodes.values() if n.is_blacklisted),
        multi_parent_count=multi_parent,
        max_depth=max_depth,
    )
