from __future__ import annotations

import json

import pytest

from conftest import feature, point_geom, sample_gazetteer_doc, sample_graph_doc
from placeref.gazetteer import load_gazetteer
from placeref.graph import load_place_graph
from placeref.pipeline import (
    METHOD_ALR_ONLY,
    METHOD_ANCHOR,
    METHOD_BEST_MATCH,
    METHOD_UNRESOLVED,
    PipelineConfig,
    classify,
    georeference,
    identify_anchors,
    results_to_geojson,
    run_pipeline,
)


def test_identify_anchors_sample(sample_graph, sample_gazetteer):
    anchors = identify_anchors(sample_graph, sample_gazetteer)
    assert set(anchors) == {"a", "c", "d"}
    assert [e.entry_id for e in anchors["a"]] == ["station-main"]
    assert len(anchors["c"]) == 3  # three same-name cathedrals


def test_identify_anchors_empty_when_nothing_matches(sample_gazetteer):
    graph = load_place_graph({"nodes": [{"id": "x", "references": ["nowhere special"]}], "edges": []})
    assert identify_anchors(graph, sample_gazetteer) == {}


def test_identify_anchors_dedups_alias_hits():
    gaz = load_gazetteer({"type": "FeatureCollection", "features": [
        feature("h-1", "Grand Hotel", point_geom(0, 0)),
    ]}, projected=True)
    graph = load_place_graph({
        "nodes": [{"id": "x", "references": ["Grand Hotel", "GRAND  hotel"]}],
        "edges": [],
    })
    anchors = identify_anchors(graph, gaz)
    assert [e.entry_id for e in anchors["x"]] == ["h-1"]


def test_sample_pipeline_reproduces_narrative(sample_graph, sample_gazetteer):
    results = {r.place_id: r for r in georeference(sample_graph, sample_gazetteer)}
    assert results["a"].method == METHOD_ANCHOR and results["a"].entry_id == "station-main"
    assert results["c"].method == METHOD_ANCHOR and results["c"].entry_id == "cathedral-city"
    assert results["d"].method == METHOD_ANCHOR and results["d"].entry_id == "town-hall"
    assert results["b"].method == METHOD_BEST_MATCH and results["b"].entry_id == "fed-square"
    assert results["e"].method == METHOD_BEST_MATCH and results["e"].entry_id == "bake-house"
    assert results["f"].method == METHOD_ALR_ONLY
    assert results["f"].region.covers_point(120.0, 80.0)


def test_every_place_gets_exactly_one_result(sample_graph, sample_gazetteer):
    results = georeference(sample_graph, sample_gazetteer)
    assert [r.place_id for r in results] == list(sample_graph.nodes)
    for r in results:
        if r.method in (METHOD_ANCHOR, METHOD_BEST_MATCH):
            assert r.footprint is not None
        if r.method == METHOD_ALR_ONLY:
            assert r.region is not None and not r.region.is_empty


def test_promotion_chain_through_best_matched_place():
    gaz = load_gazetteer({"type": "FeatureCollection", "features": [
        feature("hub", "Harbor Exchange", point_geom(0, 0)),
        feature("market", "Harbor Market", point_geom(60, 0)),
    ]}, projected=True)
    graph = load_place_graph({
        "nodes": [
            {"id": "a", "references": ["Harbor Exchange"]},
            {"id": "b", "references": ["the harbor market"]},
            {"id": "g", "references": ["somewhere unnamed"]},
        ],
        "edges": [
            {"locatum": "b", "relation": "near", "relatum": "a"},
            {"locatum": "g", "relation": "near", "relatum": "b"},
        ],
    })
    results = {r.place_id: r for r in georeference(graph, gaz)}
    assert results["b"].method == METHOD_BEST_MATCH and results["b"].entry_id == "market"
    assert "promoted to anchor for later places" in results["b"].provenance
    # g's region hangs off b's assigned footprint at (60, 0)
    assert results["g"].method == METHOD_ALR_ONLY
    minx, miny, maxx, maxy = results["g"].region.geom.bounds
    assert (minx + maxx) / 2 == pytest.approx(60.0, abs=1.0)
    assert (miny + maxy) / 2 == pytest.approx(0.0, abs=1.0)


def test_no_promotion_flag_restores_single_pass(sample_graph, sample_gazetteer):
    cfg = PipelineConfig(promotion=False)
    results = {r.place_id: r for r in georeference(sample_graph, sample_gazetteer, cfg)}
    # without promotion, f's only relatum e never becomes an anchor
    assert results["f"].method == METHOD_UNRESOLVED
    assert results["b"].method == METHOD_BEST_MATCH


def test_single_anchor_graph_yields_one_anchor_result(sample_gazetteer):
    graph = load_place_graph({
        "nodes": [{"id": "only", "references": ["Melbourne Town Hall"]}],
        "edges": [],
    })
    results = georeference(graph, sample_gazetteer)
    assert len(results) == 1
    assert results[0].method == METHOD_ANCHOR
    assert results[0].entry_id == "town-hall"


def test_zero_anchor_graph_leaves_everything_unresolved(sample_gazetteer):
    graph = load_place_graph({
        "nodes": [
            {"id": "x", "references": ["nameless one"]},
            {"id": "y", "references": ["nameless two"]},
        ],
        "edges": [{"locatum": "x", "relation": "near", "relatum": "y"}],
    })
    results = georeference(graph, sample_gazetteer)
    assert all(r.method == METHOD_UNRESOLVED for r in results)


def test_place_with_only_unbuildable_relations_is_unresolved():
    # a topological relation to a point-footprint anchor admits no search space
    gaz = load_gazetteer({"type": "FeatureCollection", "features": [
        feature("a-1", "Anchor", point_geom(0, 0)),
    ]}, projected=True)
    graph = load_place_graph({
        "nodes": [{"id": "A", "references": ["Anchor"]},
                  {"id": "x", "references": ["mystery"]}],
        "edges": [{"locatum": "x", "relation": "disjoint", "relatum": "A"}],
    })
    results = {r.place_id: r for r in georeference(graph, gaz)}
    assert results["A"].method == METHOD_ANCHOR
    assert results["x"].method == METHOD_UNRESOLVED
    assert results["x"].provenance == ["no relationship admits a search space"]


def test_ambiguous_relation_free_anchor_is_unresolved():
    # two same-name entries in one tight cluster, place has no other relations
    gaz = load_gazetteer({"type": "FeatureCollection", "features": [
        feature("kfc-1", "Fried Chicken", point_geom(0, 0)),
        feature("kfc-2", "Fried Chicken", point_geom(30, 0)),
        feature("other", "Other Place", point_geom(10, 20)),
    ]}, projected=True)
    graph = load_place_graph({
        "nodes": [
            {"id": "k", "references": ["Fried Chicken"]},
            {"id": "o", "references": ["Other Place"]},
        ],
        "edges": [],
    })
    results = {r.place_id: r for r in georeference(graph, gaz)}
    assert results["o"].method == METHOD_ANCHOR
    assert results["k"].method == METHOD_UNRESOLVED


def test_classify_flips_methods_with_threshold(sample_graph, sample_gazetteer):
    results = georeference(sample_graph, sample_gazetteer)
    by_id = {r.place_id: r for r in results}
    b_score = by_id["b"].score
    assert 0.7 <= b_score < 0.9

    stricter = {r.place_id: r for r in classify(results, 0.9)}
    assert stricter["b"].method == METHOD_ALR_ONLY
    assert stricter["b"].region is not None
    assert stricter["a"].method == METHOD_ANCHOR  # anchors untouched

    lax = {r.place_id: r for r in classify(results, 0.0)}
    assert lax["b"].method == METHOD_BEST_MATCH
    assert lax["f"].method == METHOD_BEST_MATCH  # f carried a sub-threshold score
    assert lax["f"].footprint is not None  # flipping down to best_match keeps geometry


def test_classify_leaves_unscored_places_alone(sample_graph, sample_gazetteer):
    results = georeference(sample_graph, sample_gazetteer)
    again = classify(results, 0.99)
    methods = {r.place_id: r.method for r in again}
    assert methods["a"] == METHOD_ANCHOR
    assert methods["b"] == METHOD_ALR_ONLY
    assert methods["e"] == METHOD_ALR_ONLY


def test_geojson_serialization_is_deterministic_across_jobs(sample_graph, sample_gazetteer):
    run1 = georeference(sample_graph, sample_gazetteer, PipelineConfig(jobs=1))
    run8 = georeference(sample_graph, sample_gazetteer, PipelineConfig(jobs=8))
    doc1 = results_to_geojson(run1, sample_graph, sample_gazetteer)
    doc8 = results_to_geojson(run8, sample_graph, sample_gazetteer)
    assert json.dumps(doc1, sort_keys=True) == json.dumps(doc8, sort_keys=True)


def test_geojson_carries_alr_and_provenance(sample_graph, sample_gazetteer):
    results = georeference(sample_graph, sample_gazetteer)
    doc = results_to_geojson(results, sample_graph, sample_gazetteer)
    features = {f["properties"]["place_id"]: f for f in doc["features"]}
    assert doc["type"] == "FeatureCollection"
    b = features["b"]
    assert b["geometry"]["type"] == "Polygon"  # matched footprint
    assert b["properties"]["alr"] is not None  # region retained for evaluation
    assert any("candidate entries" in p for p in b["properties"]["provenance"])
    f = features["f"]
    assert f["geometry"] == f["properties"]["alr"]
    assert f["properties"]["references"] == ["our meeting spot"]


def test_unprojected_output_roundtrips_through_wgs84():
    # shift the sample scene to Melbourne coordinates and load as WGS84
    doc = sample_gazetteer_doc()
    proj_lat, proj_lon = -37.8176, 144.9672
    import math

    k = math.pi / 180.0 * 6_371_000.0

    def to_lonlat(x, y):
        return (proj_lon + x / (k * math.cos(math.radians(proj_lat))), proj_lat + y / k)

    def convert(coords):
        if isinstance(coords[0], (int, float)):
            return list(to_lonlat(coords[0], coords[1]))
        return [convert(c) for c in coords]

    for feat in doc["features"]:
        feat["geometry"]["coordinates"] = convert(feat["geometry"]["coordinates"])
    gazetteer = load_gazetteer(doc)  # geographic
    graph = load_place_graph(sample_graph_doc())
    results = {r.place_id: r for r in georeference(graph, gazetteer)}
    assert results["b"].method == METHOD_BEST_MATCH
    assert results["b"].entry_id == "fed-square"
    out = results_to_geojson(list(results.values()), graph, gazetteer)
    lon, lat = out["features"][0]["geometry"]["coordinates"][0][0]
    assert 144.0 < lon < 146.0 and -39.0 < lat < -37.0
