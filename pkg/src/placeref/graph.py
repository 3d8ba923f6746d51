"""Place-graph data model and ingestion.

A place graph is a labeled directed multigraph: nodes are places carrying one
or more natural-language references, edges are qualitative spatial
relationships directed locatum -> relatum. Graphs are loaded from a flat JSON
document and are immutable afterwards.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import GraphFormatError, UnknownPlaceError, UnknownRelationError

logger = logging.getLogger(__name__)

ANNOTATION_LABELS = ("anchor", "gazetteered", "non-gazetteered")


class RelationFamily(Enum):
    CARDINAL = "cardinal"
    DISTANCE = "distance"
    RELATIVE = "relative"
    TOPOLOGICAL = "topological"


class RelationKind(Enum):
    """The 21 supported spatial relationships, tagged with their family."""

    NORTH_OF = ("north_of", RelationFamily.CARDINAL)
    SOUTH_OF = ("south_of", RelationFamily.CARDINAL)
    EAST_OF = ("east_of", RelationFamily.CARDINAL)
    WEST_OF = ("west_of", RelationFamily.CARDINAL)
    NORTH_EAST_OF = ("north_east_of", RelationFamily.CARDINAL)
    NORTH_WEST_OF = ("north_west_of", RelationFamily.CARDINAL)
    SOUTH_EAST_OF = ("south_east_of", RelationFamily.CARDINAL)
    SOUTH_WEST_OF = ("south_west_of", RelationFamily.CARDINAL)
    NEAR = ("near", RelationFamily.DISTANCE)
    IN_FRONT_OF = ("in_front_of", RelationFamily.RELATIVE)
    BEHIND = ("behind", RelationFamily.RELATIVE)
    LEFT_OF = ("left_of", RelationFamily.RELATIVE)
    RIGHT_OF = ("right_of", RelationFamily.RELATIVE)
    INSIDE = ("inside", RelationFamily.TOPOLOGICAL)
    COVERED_BY = ("covered_by", RelationFamily.TOPOLOGICAL)
    OVERLAP = ("overlap", RelationFamily.TOPOLOGICAL)
    MEET = ("meet", RelationFamily.TOPOLOGICAL)
    DISJOINT = ("disjoint", RelationFamily.TOPOLOGICAL)
    COVER = ("cover", RelationFamily.TOPOLOGICAL)
    CONTAIN = ("contain", RelationFamily.TOPOLOGICAL)
    EQUAL = ("equal", RelationFamily.TOPOLOGICAL)

    def __init__(self, label: str, family: RelationFamily):
        self.label = label
        self.family = family


_BY_LABEL = {kind.label: kind for kind in RelationKind}


def _normalize_surface(surface: str) -> str:
    return " ".join(surface.replace("_", " ").casefold().split())


class SynonymTable:
    """Maps relation surface phrases to canonical kinds.

    Canonical labels always map to themselves; additional phrases come from a
    JSON file of {"phrase": "canonical_label"} pairs.
    """

    def __init__(self, phrases: dict[str, str] | None = None):
        self._table: dict[str, RelationKind] = {}
        for kind in RelationKind:
            self._table[_normalize_surface(kind.label)] = kind
        for phrase, label in (phrases or {}).items():
            kind = _BY_LABEL.get(label)
            if kind is None:
                raise GraphFormatError(f"synonym table maps {phrase!r} to unknown kind {label!r}")
            self._table[_normalize_surface(phrase)] = kind

    @classmethod
    def load(cls, path: str | Path) -> "SynonymTable":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @classmethod
    def default(cls) -> "SynonymTable":
        raw = resources.files("placeref.data").joinpath("relation_synonyms.json").read_text("utf-8")
        return cls(json.loads(raw))

    def lookup(self, surface: str) -> RelationKind:
        kind = self._table.get(_normalize_surface(surface))
        if kind is None:
            raise UnknownRelationError(surface)
        return kind

    def __contains__(self, surface: str) -> bool:
        return _normalize_surface(surface) in self._table


_DEFAULT_TABLE: SynonymTable | None = None


def default_synonyms() -> SynonymTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = SynonymTable.default()
    return _DEFAULT_TABLE


def normalize_relation(surface: str, table: SynonymTable | None = None) -> RelationKind:
    """Map a relation surface phrase to its canonical kind.

    Matching is case-insensitive on trimmed input with internal whitespace
    collapsed. Raises UnknownRelationError for phrases absent from the table.
    """
    if not surface or not surface.strip():
        raise UnknownRelationError(surface)
    return (table or default_synonyms()).lookup(surface)


@dataclass(frozen=True)
class Annotation:
    """Ground-truth label attached to a node, used only for evaluation."""

    label: str
    truth_entry: str | None = None


@dataclass(frozen=True)
class PlaceNode:
    id: str
    references: tuple[str, ...]
    annotation: Annotation | None = None

    def __post_init__(self):
        if not self.references:
            raise GraphFormatError(f"node {self.id!r} has no references")
        if any(not r.strip() for r in self.references):
            raise GraphFormatError(f"node {self.id!r} has an empty reference")


@dataclass(frozen=True)
class SpatialEdge:
    locatum_id: str
    relatum_id: str
    kind: RelationKind
    source_label: str

    def __post_init__(self):
        if self.locatum_id == self.relatum_id:
            raise GraphFormatError(f"self-relationship on node {self.locatum_id!r}")


@dataclass
class PlaceGraph:
    """Immutable-after-load multigraph of places and spatial relationships."""

    nodes: dict[str, PlaceNode] = field(default_factory=dict)
    edges: list[SpatialEdge] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def node(self, place_id: str) -> PlaceNode:
        try:
            return self.nodes[place_id]
        except KeyError:
            raise UnknownPlaceError(f"unknown place id: {place_id!r}") from None

    def references_of(self, place_id: str) -> list[str]:
        """All references of a place, in stored order. Never empty."""
        return list(self.node(place_id).references)

    def relationships_to(self, place_id: str, target_ids: Iterable[str]) -> list[SpatialEdge]:
        """Outgoing edges of ``place_id`` whose relatum is in ``target_ids``.

        Returned in insertion order, so repeated calls are deterministic.
        """
        self.node(place_id)
        targets = set(target_ids)
        return [e for e in self.edges if e.locatum_id == place_id and e.relatum_id in targets]

    def out_edges(self, place_id: str) -> list[SpatialEdge]:
        self.node(place_id)
        return [e for e in self.edges if e.locatum_id == place_id]

    def to_document(self) -> dict:
        """Serialize back to the JSON document structure."""
        nodes = []
        for node in self.nodes.values():
            item: dict = {"id": node.id, "references": list(node.references)}
            if node.annotation is not None:
                ann: dict = {"label": node.annotation.label}
                if node.annotation.truth_entry is not None:
                    ann["truth_entry"] = node.annotation.truth_entry
                item["annotation"] = ann
            nodes.append(item)
        edges = [
            {"locatum": e.locatum_id, "relation": e.kind.label, "relatum": e.relatum_id}
            for e in self.edges
        ]
        return {"nodes": nodes, "edges": edges}


def load_place_graph(
    document: dict | str | Path,
    *,
    strict: bool = True,
    synonyms: SynonymTable | None = None,
) -> PlaceGraph:
    """Parse and validate a place-graph JSON document.

    ``document`` may be a parsed dict, a JSON string, or a path to a file.
    Unknown relation labels are an error in strict mode; in lenient mode the
    edge is dropped and a warning recorded on the returned graph.
    """
    doc = _as_document(document)
    if not isinstance(doc, dict):
        raise GraphFormatError("top-level document must be an object")

    table = synonyms or default_synonyms()
    graph = PlaceGraph()

    for raw in doc.get("nodes", []):
        if not isinstance(raw, dict) or "id" not in raw or "references" not in raw:
            raise GraphFormatError(f"malformed node entry: {raw!r}")
        node_id = str(raw["id"])
        if node_id in graph.nodes:
            raise GraphFormatError(f"duplicate node id: {node_id!r}")
        refs = raw["references"]
        if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
            raise GraphFormatError(f"node {node_id!r}: references must be a list of strings")
        annotation = _parse_annotation(node_id, raw.get("annotation"))
        graph.nodes[node_id] = PlaceNode(
            id=node_id,
            references=tuple(r.strip() for r in refs),
            annotation=annotation,
        )

    for raw in doc.get("edges", []):
        if not isinstance(raw, dict) or not {"locatum", "relation", "relatum"} <= raw.keys():
            raise GraphFormatError(f"malformed edge entry: {raw!r}")
        locatum, relatum = str(raw["locatum"]), str(raw["relatum"])
        for endpoint in (locatum, relatum):
            if endpoint not in graph.nodes:
                raise GraphFormatError(f"edge references undeclared node {endpoint!r}")
        surface = str(raw["relation"])
        try:
            kind = normalize_relation(surface, table)
        except UnknownRelationError:
            if strict:
                raise
            message = f"dropped edge {locatum!r} -> {relatum!r}: unknown relation {surface!r}"
            logger.warning(message)
            graph.warnings.append(message)
            continue
        graph.edges.append(SpatialEdge(locatum, relatum, kind, surface))

    return graph


def _as_document(document: dict | str | Path) -> dict:
    if isinstance(document, dict):
        return document
    if isinstance(document, Path):
        text = document.read_text("utf-8")
    else:
        text = document
        path = Path(text)
        # Heuristic: a short string without braces is a file path.
        if "{" not in text:
            if not path.exists():
                raise GraphFormatError(f"no such graph file: {text!r}")
            text = path.read_text("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON: {exc}") from exc


def _parse_annotation(node_id: str, raw) -> Annotation | None:
    if raw is None:
        return None
    if not isinstance(raw, dict) or "label" not in raw:
        raise GraphFormatError(f"node {node_id!r}: malformed annotation {raw!r}")
    label = raw["label"]
    if label not in ANNOTATION_LABELS:
        raise GraphFormatError(f"node {node_id!r}: unknown annotation label {label!r}")
    truth = raw.get("truth_entry")
    return Annotation(label=label, truth_entry=None if truth is None else str(truth))
