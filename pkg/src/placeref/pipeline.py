"""Three-stage geo-referencing of a place graph against a gazetteer.

Stage 1 identifies anchor places (at least one reference exactly matching a
gazetteer name) and disambiguates multi-candidate anchors by density
clustering. Stage 2 geo-references the remaining places by best-matching
candidates inside their derived constraint regions; places scoring at or
above the classification threshold may be promoted to anchors for places
processed later. Stage 3 leaves sub-threshold and candidate-less places with
their constraint region as the geo-reference, and marks places with no path
to any anchor unresolved.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from shapely.geometry import mapping as geojson_mapping

from .clustering import DisambiguationResult, disambiguate_anchors
from .errors import PlacerefError, UnconstrainedError
from .gazetteer import Footprint, Gazetteer, GazetteerEntry
from .graph import PlaceGraph
from .matching import (
    AnchorState,
    MatchResult,
    MatchWeights,
    SemanticDictionary,
    best_match,
)
from .spatial import NearBufferConfig, Region

METHOD_ANCHOR = "anchor"
METHOD_BEST_MATCH = "best_match"
METHOD_ALR_ONLY = "alr_only"
METHOD_UNRESOLVED = "unresolved"


@dataclass
class PipelineConfig:
    delta_d: float = 100.0
    near: NearBufferConfig = field(default_factory=NearBufferConfig)
    weights: MatchWeights = field(default_factory=MatchWeights)
    threshold: float = 0.7
    strict: bool = False
    promotion: bool = True
    jobs: int = 1
    frames: dict[str, float] = field(default_factory=dict)  # relatum place id -> bearing deg

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise PlacerefError("classification threshold must be in [0, 1]")
        if self.jobs < 1:
            raise PlacerefError("jobs must be >= 1")


@dataclass
class GeoreferenceResult:
    place_id: str
    method: str
    entry_id: str | None = None
    footprint: Footprint | None = None
    region: Region | None = None  # constraint region, retained even for matches
    score: float | None = None
    threshold_used: float | None = None
    provenance: list[str] = field(default_factory=list)


def identify_anchors(graph: PlaceGraph, gazetteer: Gazetteer) -> dict[str, list[GazetteerEntry]]:
    """Places with at least one reference exactly matching a gazetteer name,
    mapped to their candidate entries (deduplicated by entry id)."""
    anchors: dict[str, list[GazetteerEntry]] = {}
    for place_id, node in graph.nodes.items():
        entries: list[GazetteerEntry] = []
        seen: set[str] = set()
        for reference in node.references:
            for entry in gazetteer.lookup_exact(reference):
                if entry.entry_id not in seen:
                    seen.add(entry.entry_id)
                    entries.append(entry)
        if entries:
            anchors[place_id] = entries
    return anchors


@dataclass
class PipelineRun:
    """Results plus the intermediate state useful for inspection and dumps."""

    results: list[GeoreferenceResult]
    disambiguation: DisambiguationResult | None
    anchor_candidates: dict[str, list[GazetteerEntry]]
    match_results: dict[str, MatchResult] = field(default_factory=dict)


def georeference(
    graph: PlaceGraph,
    gazetteer: Gazetteer,
    cfg: PipelineConfig | None = None,
    dictionary: SemanticDictionary | None = None,
) -> list[GeoreferenceResult]:
    """Run the full pipeline; returns one result per place, in graph order."""
    return run_pipeline(graph, gazetteer, cfg, dictionary).results


def run_pipeline(
    graph: PlaceGraph,
    gazetteer: Gazetteer,
    cfg: PipelineConfig | None = None,
    dictionary: SemanticDictionary | None = None,
) -> PipelineRun:
    cfg = cfg or PipelineConfig()
    dictionary = dictionary or SemanticDictionary.default()

    results: dict[str, GeoreferenceResult] = {}
    anchor_candidates = identify_anchors(graph, gazetteer)

    anchors: dict[str, AnchorState] = {}
    disamb: DisambiguationResult | None = None
    if anchor_candidates:
        disamb = disambiguate_anchors(anchor_candidates, cfg.delta_d, jobs=cfg.jobs)
        for place_id, entry_id in disamb.assignments.items():
            entry = gazetteer.entry(entry_id)
            anchors[place_id] = AnchorState(entry_id, entry.footprint, disamb.context_for(place_id))
            provenance = [
                f"anchor lookup: {len(anchor_candidates[place_id])} candidate entries"
            ]
            provenance += [e.split(": ", 1)[1] for e in disamb.events if e.startswith(f"{place_id}: ")]
            results[place_id] = GeoreferenceResult(
                place_id=place_id,
                method=METHOD_ANCHOR,
                entry_id=entry_id,
                footprint=entry.footprint,
                threshold_used=cfg.threshold,
                provenance=provenance,
            )
    # Stage 2: scored levels; promotion between levels enables chains through
    # places that were themselves geo-referenced by matching.
    def score_one(place_id: str) -> MatchResult | None:
        try:
            return best_match(
                place_id,
                graph,
                gazetteer,
                anchors,
                dictionary,
                weights=cfg.weights,
                near_cfg=cfg.near,
                frames=cfg.frames,
            )
        except UnconstrainedError:
            # e.g. only topological relations to point-footprint anchors
            return None

    match_results: dict[str, MatchResult] = {}
    remaining = [pid for pid in graph.nodes if pid not in results]
    while remaining and anchors:
        level = [
            (len(graph.relationships_to(pid, anchors.keys())), idx, pid)
            for idx, pid in enumerate(remaining)
        ]
        level = [item for item in level if item[0] > 0]
        if not level:
            break
        level.sort(key=lambda item: (-item[0], item[1]))
        ordered = [pid for _, _, pid in level]

        if cfg.jobs > 1 and len(ordered) > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                matches = list(pool.map(score_one, ordered))
        else:
            matches = [score_one(pid) for pid in ordered]

        promotions: dict[str, AnchorState] = {}
        for place_id, match in zip(ordered, matches):
            remaining.remove(place_id)
            if match is None:
                results[place_id] = GeoreferenceResult(
                    place_id=place_id,
                    method=METHOD_UNRESOLVED,
                    threshold_used=cfg.threshold,
                    provenance=["no relationship admits a search space"],
                )
                continue
            match_results[place_id] = match
            provenance = list(match.events)
            if place_id in (disamb.ambiguous if disamb else []):
                provenance.insert(0, "ambiguous anchor deferred to best-matching")
            region = match.alr.region if match.alr else None
            if match.no_candidates:
                results[place_id] = GeoreferenceResult(
                    place_id=place_id,
                    method=METHOD_ALR_ONLY,
                    region=region,
                    threshold_used=cfg.threshold,
                    provenance=provenance + ["no candidates; geo-referenced by constraint region"],
                )
                continue
            entry = gazetteer.entry(match.entry_id)
            if match.score >= cfg.threshold:
                provenance.append(f"matched {match.entry_id} at {match.score:.4f}")
                results[place_id] = GeoreferenceResult(
                    place_id=place_id,
                    method=METHOD_BEST_MATCH,
                    entry_id=match.entry_id,
                    footprint=entry.footprint,
                    region=region,
                    score=match.score,
                    threshold_used=cfg.threshold,
                    provenance=provenance,
                )
                if cfg.promotion:
                    c = entry.footprint.centroid
                    context = disamb.context_for_point(c.x, c.y) if disamb else None
                    promotions[place_id] = AnchorState(match.entry_id, entry.footprint, context)
                    results[place_id].provenance.append("promoted to anchor for later places")
            else:
                provenance.append(
                    f"best score {match.score:.4f} below threshold; classified non-gazetteered"
                )
                results[place_id] = GeoreferenceResult(
                    place_id=place_id,
                    method=METHOD_ALR_ONLY,
                    entry_id=match.entry_id,
                    # footprint kept so classify() can lower the threshold later
                    footprint=entry.footprint,
                    region=region,
                    score=match.score,
                    threshold_used=cfg.threshold,
                    provenance=provenance,
                )
        anchors.update(promotions)

    # Stage 3 leftovers: no path to any geo-referenced anchor.
    for place_id in remaining:
        results[place_id] = GeoreferenceResult(
            place_id=place_id,
            method=METHOD_UNRESOLVED,
            threshold_used=cfg.threshold,
            provenance=["no relationships to any geo-referenced anchor"],
        )

    return PipelineRun(
        results=[results[pid] for pid in graph.nodes],
        disambiguation=disamb,
        anchor_candidates=anchor_candidates,
        match_results=match_results,
    )


def classify(results: list[GeoreferenceResult], threshold: float) -> list[GeoreferenceResult]:
    """Re-finalize methods for scored places under a different threshold.

    Places carrying a best-match score flip between best_match and alr_only
    as the threshold moves; anchors and unresolved places are untouched.
    """
    out: list[GeoreferenceResult] = []
    for r in results:
        if r.score is None or r.method in (METHOD_ANCHOR, METHOD_UNRESOLVED):
            out.append(r)
            continue
        method = METHOD_BEST_MATCH if r.score >= threshold else METHOD_ALR_ONLY
        out.append(
            GeoreferenceResult(
                place_id=r.place_id,
                method=method,
                entry_id=r.entry_id,
                footprint=r.footprint,
                region=r.region,
                score=r.score,
                threshold_used=threshold,
                provenance=r.provenance,
            )
        )
    return out


def results_to_geojson(
    results: list[GeoreferenceResult],
    graph: PlaceGraph,
    gazetteer: Gazetteer,
) -> dict:
    """Serialize results as a GeoJSON FeatureCollection.

    Geometries are written in the gazetteer's input coordinate system
    (unprojected back to WGS84 when the input was geographic).
    """
    unproject = gazetteer.projection.inverse if gazetteer.projection else None

    features = []
    for r in results:
        if r.method in (METHOD_ANCHOR, METHOD_BEST_MATCH):
            geometry = _geometry_dict(r.footprint.geom, unproject)
        elif r.method == METHOD_ALR_ONLY and r.region is not None:
            geometry = _geometry_dict(r.region.geom, unproject)
        else:
            geometry = None
        properties = {
            "place_id": r.place_id,
            "method": r.method,
            "entry_id": r.entry_id,
            "score": r.score,
            "threshold": r.threshold_used,
            "references": list(graph.node(r.place_id).references),
            "provenance": list(r.provenance),
            "alr": _geometry_dict(r.region.geom, unproject) if r.region is not None else None,
        }
        features.append({"type": "Feature", "geometry": geometry, "properties": properties})
    return {"type": "FeatureCollection", "features": features}


def _geometry_dict(geom, unproject) -> dict:
    raw = geojson_mapping(geom)
    if unproject is None:
        return _listify(raw)
    return _listify({"type": raw["type"], "coordinates": _map_coords(raw["coordinates"], unproject)})


def _map_coords(coords, unproject):
    if isinstance(coords[0], (int, float)):
        return list(unproject(coords[0], coords[1]))
    return [_map_coords(c, unproject) for c in coords]


def _listify(obj):
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_listify(v) for v in obj]
    return obj
