"""Reference similarity, overall scoring, and the best-matching loop.

A place reference matches a gazetteer entry through token-level comparison:
each reference token takes its best similarity against the pool of entry-name
tokens and tag-value tokens (so word reordering and tag aliases are handled),
and the per-token maxima are averaged. Token similarity consults an
abbreviation list and a semantic pair dictionary before falling back to
Damerau-Levenshtein edit-distance similarity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from ._kernels import damerau_levenshtein
from .errors import NoSearchSpaceError, PlacerefError, UnconstrainedError
from .gazetteer import Footprint, Gazetteer, GazetteerEntry
from .graph import PlaceGraph
from .spatial import (
    AnchoredRelation,
    AlrDerivation,
    NearBufferConfig,
    SpatialContext,
    buffer_distance,
    derive_alr,
    search_space,
    spatial_similarity_detail,
)

STOP_WORDS = frozenset({"of", "the", "a", "an", "and"})

_TOKEN_RE = re.compile(r"[\w']+\.?")


def tokenize(text: str) -> list[str]:
    """Casefolded tokens; internal apostrophes kept, a trailing period kept
    as an abbreviation hint."""
    tokens = []
    for raw in _TOKEN_RE.findall(text.casefold()):
        dotted = raw.endswith(".")
        core = raw.rstrip(".").strip("'")
        if core:
            tokens.append(core + "." if dotted else core)
    return tokens


def _bare(token: str) -> str:
    return token.rstrip(".")


class SemanticDictionary:
    """Symmetric token-pair similarities plus an abbreviation list."""

    def __init__(
        self,
        pairs: Mapping[tuple[str, str], float] | None = None,
        abbreviations: Sequence[tuple[str, str]] | None = None,
    ):
        self._pairs: dict[tuple[str, str], float] = {}
        for (a, b), score in (pairs or {}).items():
            if not 0.0 <= score <= 1.0:
                raise PlacerefError(f"pair score out of range: {a!r}/{b!r} = {score}")
            self._pairs[_key(a, b)] = score
        self._abbrev: set[tuple[str, str]] = {_key(a, b) for a, b in (abbreviations or [])}

    @classmethod
    def load(cls, path: str | Path) -> "SemanticDictionary":
        return cls._parse(Path(path).read_text("utf-8"), str(path))

    @classmethod
    def default(cls) -> "SemanticDictionary":
        raw = resources.files("placeref.data").joinpath("semantic_dictionary.tsv").read_text("utf-8")
        return cls._parse(raw, "<builtin>")

    @classmethod
    def _parse(cls, text: str, source: str) -> "SemanticDictionary":
        pairs: dict[tuple[str, str], float] = {}
        abbrevs: list[tuple[str, str]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise PlacerefError(f"{source}:{lineno}: expected 3 tab-separated fields")
            if parts[0] == "abbr":
                abbrevs.append((parts[1].casefold(), parts[2].casefold()))
            else:
                try:
                    score = float(parts[2])
                except ValueError as exc:
                    raise PlacerefError(f"{source}:{lineno}: bad score {parts[2]!r}") from exc
                pairs[(parts[0].casefold(), parts[1].casefold())] = score
        return cls(pairs, abbrevs)

    def is_abbreviation(self, a: str, b: str) -> bool:
        return _key(a, b) in self._abbrev

    def pair_score(self, a: str, b: str) -> float | None:
        return self._pairs.get(_key(a, b))

    def get_sim(self, a: str, b: str) -> float | None:
        """Dictionary similarity, or None when the pair is not covered."""
        if a == b:
            return 1.0
        if self.is_abbreviation(a, b):
            return 1.0
        return self.pair_score(a, b)


def _key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def token_similarity(t1: str, t2: str, dictionary: SemanticDictionary) -> float:
    """Similarity of two tokens in [0, 1].

    Abbreviation pairs and dotted prefixes ("fed." vs "federation") score
    1.0; known semantic pairs use their stored score; everything else falls
    back to 1 - DL(t1, t2) / max(len), with adjacent transpositions counting
    as one edit.
    """
    b1, b2 = _bare(t1), _bare(t2)
    if not b1 or not b2:
        raise PlacerefError("token similarity needs non-empty tokens")
    sim = dictionary.get_sim(b1, b2)
    if sim is not None and sim >= 1.0:
        return 1.0
    if t1.endswith(".") and len(b1) >= 2 and b2.startswith(b1):
        return 1.0
    if t2.endswith(".") and len(b2) >= 2 and b1.startswith(b2):
        return 1.0
    if sim is not None:
        return sim
    return 1.0 - damerau_levenshtein(b1, b2) / max(len(b1), len(b2))


def reference_similarity(reference: str, entry: GazetteerEntry, dictionary: SemanticDictionary) -> float:
    """Mean over reference tokens of the best match against the entry's
    name and tag-value tokens. Connective stop words in the reference are
    ignored."""
    pool = tokenize(entry.name)
    if not pool:
        raise PlacerefError(f"entry {entry.entry_id!r} has no name tokens")
    for value in entry.tags.values():
        pool.extend(tokenize(value))

    ref_tokens = tokenize(reference)
    content = [t for t in ref_tokens if _bare(t) not in STOP_WORDS]
    if not content:
        content = ref_tokens
    if not content:
        raise PlacerefError("reference has no tokens")

    total = 0.0
    for rt in content:
        total += max(token_similarity(rt, pt, dictionary) for pt in pool)
    return total / len(content)


@dataclass(frozen=True)
class MatchWeights:
    """Relative weights of reference and spatial similarity; normalized to sum 1."""

    w_ref: float = 0.7
    w_spat: float = 0.3

    def __post_init__(self):
        if self.w_ref < 0 or self.w_spat < 0 or self.w_ref + self.w_spat <= 0:
            raise PlacerefError("weights must be non-negative with a positive sum")
        total = self.w_ref + self.w_spat
        object.__setattr__(self, "w_ref", self.w_ref / total)
        object.__setattr__(self, "w_spat", self.w_spat / total)

    @classmethod
    def parse(cls, spec: str) -> "MatchWeights":
        try:
            ref, spat = (float(p) for p in spec.split(","))
        except ValueError as exc:
            raise PlacerefError(f"weights must be 'w_ref,w_spat', got {spec!r}") from exc
        return cls(ref, spat)


def overall_similarity(ref_sim: float, spat_sim: float, weights: MatchWeights) -> float:
    return weights.w_ref * ref_sim + weights.w_spat * spat_sim


@dataclass(frozen=True)
class AnchorState:
    """A geo-referenced anchor usable as a relatum."""

    entry_id: str
    footprint: Footprint
    context: SpatialContext


@dataclass
class ScoreRow:
    reference: str
    entry_id: str
    ref_sim: float
    spat_sim: float
    overall: float


@dataclass
class MatchResult:
    place_id: str
    entry_id: str | None  # None when no candidate intersects the region
    score: float | None
    ref_sim: float | None
    spat_sim: float | None
    table: list[ScoreRow] = field(default_factory=list)
    alr: AlrDerivation | None = None
    candidate_ids: list[str] = field(default_factory=list)
    events: list[str] = field(default_factory=list)

    @property
    def no_candidates(self) -> bool:
        return self.entry_id is None


def best_match(
    place_id: str,
    graph: PlaceGraph,
    gazetteer: Gazetteer,
    anchors: Mapping[str, AnchorState],
    dictionary: SemanticDictionary,
    weights: MatchWeights = MatchWeights(),
    near_cfg: NearBufferConfig = NearBufferConfig(),
    frames: Mapping[str, float] | None = None,
) -> MatchResult:
    """Score all gazetteer entries inside the place's constraint region.

    The region is the intersection of the search spaces of the place's
    relationships to geo-referenced anchors. Every stored reference is scored
    against every candidate; the candidate with the highest overall similarity
    wins, with ties broken by higher reference similarity and then by entry
    id. Raises UnconstrainedError when the place has no relationship to any
    anchor.
    """
    frames = frames or {}
    edges = graph.relationships_to(place_id, anchors.keys())
    if not edges:
        raise UnconstrainedError(f"{place_id!r} has no relationships to geo-referenced anchors")

    events: list[str] = []
    spaces = []
    relations = []
    for edge in edges:
        anchor = anchors[edge.relatum_id]
        label = f"{edge.kind.label} {edge.relatum_id}"
        relations.append(
            AnchoredRelation(
                kind=edge.kind,
                relatum=anchor.footprint,
                buffer_dist=buffer_distance(anchor.footprint, anchor.context, near_cfg),
                frame_deg=frames.get(edge.relatum_id),
                label=label,
            )
        )
        try:
            spaces.append(
                search_space(
                    edge.kind,
                    anchor.footprint,
                    anchor.context,
                    near_cfg,
                    relatum_entry_id=anchor.entry_id,
                    frame_deg=frames.get(edge.relatum_id),
                    label=label,
                )
            )
        except NoSearchSpaceError:
            events.append(f"no search space for '{label}' (non-polygon relatum)")

    if not spaces:
        raise UnconstrainedError(f"{place_id!r}: no relationship admits a search space")

    derivation = derive_alr(spaces)
    for space in derivation.relaxed:
        events.append(f"relaxed contradictory constraint '{space.label}'")
    if derivation.low_confidence:
        events.append("constraint region is the clipped context window (low confidence)")

    candidates = gazetteer.query_region(derivation.region.geom)
    events.append(f"{len(candidates)} candidate entries in constraint region")

    result = MatchResult(
        place_id=place_id,
        entry_id=None,
        score=None,
        ref_sim=None,
        spat_sim=None,
        alr=derivation,
        candidate_ids=[c.entry_id for c in candidates],
        events=events,
    )
    if not candidates:
        return result

    references = graph.references_of(place_id)
    best_key: tuple[float, float, str] | None = None
    for entry in candidates:
        spatial = spatial_similarity_detail(entry.footprint, relations)
        for reference in references:
            ref_sim = reference_similarity(reference, entry, dictionary)
            overall = overall_similarity(ref_sim, spatial.score, weights)
            result.table.append(ScoreRow(reference, entry.entry_id, ref_sim, spatial.score, overall))
            # prefer higher overall, then higher reference similarity, then
            # the lexicographically smallest entry id
            key = (overall, ref_sim, entry.entry_id)
            if best_key is None or key[:2] > best_key[:2] or (key[:2] == best_key[:2] and key[2] < best_key[2]):
                best_key = key
                result.entry_id = entry.entry_id
                result.score = overall
                result.ref_sim = ref_sim
                result.spat_sim = spatial.score
    return result
