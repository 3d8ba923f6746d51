"""Shared fixtures: the six-node sample scenario and synthetic generators."""

from __future__ import annotations

import numpy as np
import pytest

from placeref.gazetteer import load_gazetteer
from placeref.graph import load_place_graph


def polygon_geom(cx, cy, w, h):
    x0, y0, x1, y1 = cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2
    return {"type": "Polygon", "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]]}


def point_geom(x, y):
    return {"type": "Point", "coordinates": [x, y]}


def feature(entry_id, name, geometry, feature_type="", tags=None):
    props = {"id": entry_id, "name": name, "feature_type": feature_type}
    if tags:
        props["tags"] = tags
    return {"type": "Feature", "geometry": geometry, "properties": props}


def sample_gazetteer_doc() -> dict:
    """Twelve entries around a city block, coordinates in planar meters.

    Three identically named cathedrals (one in the block, two far away)
    exercise disambiguation; the square, the galleries, and the bake house sit
    inside the constraint regions of the sample graph's unmatched places.
    """
    return {
        "type": "FeatureCollection",
        "features": [
            feature("station-main", "Flinders Street Station", polygon_geom(0, 0, 200, 100),
                    "station", {"operator": "Metro Trains"}),
            feature("cathedral-city", "St Paul's Cathedral", point_geom(150, 120), "church"),
            feature("cathedral-west", "St Paul's Cathedral", point_geom(-52000, 8000), "church"),
            feature("cathedral-north", "St Paul's Cathedral", point_geom(30000, 61000), "church"),
            feature("town-hall", "Melbourne Town Hall", point_geom(320, 40), "civic"),
            feature("fed-square", "Federation Square", polygon_geom(180, 75, 30, 20), "plaza"),
            feature("ian-potter", "Ian Potter Centre", point_geom(185, 50), "gallery"),
            feature("kirra", "Kirra Galleries", point_geom(130, 60), "gallery"),
            feature("bake-house", "Flinders Street Bake House", polygon_geom(95, 45, 8, 6), "bakery"),
            feature("young-jackson", "Young and Jackson", point_geom(110, 95), "pub"),
            feature("campbell-arcade", "Campbell Arcade", point_geom(-60, -80), "arcade"),
            feature("evan-walker", "Evan Walker Bridge", point_geom(60, -140), "bridge"),
        ],
    }


def sample_graph_doc() -> dict:
    """Six places, seven relationships.

    a, c, d carry at least one gazetteered reference; b and e are gazetteered
    places without one; f is not in the gazetteer at all and is located only
    by its relationship to e.
    """
    return {
        "nodes": [
            {"id": "a", "references": ["Flinders Street Station", "the station"],
             "annotation": {"label": "anchor", "truth_entry": "station-main"}},
            {"id": "b", "references": ["Fed Sq.", "the large square"],
             "annotation": {"label": "gazetteered", "truth_entry": "fed-square"}},
            {"id": "c", "references": ["St Paul's Cathedral"],
             "annotation": {"label": "anchor", "truth_entry": "cathedral-city"}},
            {"id": "d", "references": ["Melbourne Town Hall", "the town hall"],
             "annotation": {"label": "anchor", "truth_entry": "town-hall"}},
            {"id": "e", "references": ["the bake house"],
             "annotation": {"label": "gazetteered", "truth_entry": "bake-house"}},
            {"id": "f", "references": ["our meeting spot"],
             "annotation": {"label": "non-gazetteered", "truth_point": [120.0, 80.0]}},
        ],
        "edges": [
            {"locatum": "b", "relation": "east of", "relatum": "a"},
            {"locatum": "b", "relation": "south of", "relatum": "c"},
            {"locatum": "b", "relation": "near", "relatum": "c"},
            {"locatum": "e", "relation": "inside", "relatum": "a"},
            {"locatum": "e", "relation": "near", "relatum": "c"},
            {"locatum": "d", "relation": "near", "relatum": "c"},
            {"locatum": "f", "relation": "in front of", "relatum": "e"},
        ],
    }


def sample_annotations_doc() -> dict:
    return {
        "a": {"label": "anchor", "truth_entry": "station-main"},
        "b": {"label": "gazetteered", "truth_entry": "fed-square"},
        "c": {"label": "anchor", "truth_entry": "cathedral-city"},
        "d": {"label": "anchor", "truth_entry": "town-hall"},
        "e": {"label": "gazetteered", "truth_entry": "bake-house"},
        "f": {"label": "non-gazetteered", "truth_point": [120.0, 80.0]},
    }


@pytest.fixture(scope="session")
def sample_gazetteer():
    return load_gazetteer(sample_gazetteer_doc(), projected=True)


@pytest.fixture(scope="session")
def sample_graph():
    return load_place_graph(sample_graph_doc())


# --- synthetic threshold-tradeoff fixture: 3 anchors, 30 + 30 places -------

_FIRST = ["maple", "cedar", "willow", "birch", "aspen", "rowan"]
_SECOND = ["pavilion", "terrace", "kiosk", "gallery", "rotunda"]
_NOISE = ["dusty", "quiet", "hidden", "forgotten", "sunlit", "narrow"]


def tradeoff_fixture_docs() -> tuple[dict, dict, dict]:
    """(graph, gazetteer, annotations) for the 60-place recall fixture.

    30 gazetteered places carry a stop-worded variant of their entry name
    (reference similarity 1.0, overall score comfortably above 0.7); 30
    non-gazetteered places carry dissimilar references that score well below
    it. Every place is near one of three single-entry anchors.
    """
    anchors = [("hub-a", "Anchor Exchange", 0.0, 0.0),
               ("hub-b", "Anchor Depot", 150.0, 0.0),
               ("hub-c", "Anchor Terminal", 75.0, 130.0)]
    features = [feature(eid, name, point_geom(x, y), "anchor") for eid, name, x, y in anchors]
    nodes = [
        {"id": f"hub{i}", "references": [name], "annotation": {"label": "anchor", "truth_entry": eid}}
        for i, (eid, name, _, _) in enumerate(anchors)
    ]
    edges = []

    for i in range(30):
        eid = f"shop-{i:02d}"
        name = f"{_FIRST[i % 6]} {_SECOND[i // 6]}"
        hub = i % 3
        hx, hy = anchors[hub][2], anchors[hub][3]
        angle = 2 * np.pi * i / 10.0
        radius = 30.0 + (i % 7) * 9.0
        features.append(feature(eid, name, point_geom(hx + radius * np.cos(angle), hy + radius * np.sin(angle))))
        nodes.append({
            "id": f"g{i:02d}",
            "references": [f"the {name}"],  # not an exact gazetteer name
            "annotation": {"label": "gazetteered", "truth_entry": eid},
        })
        edges.append({"locatum": f"g{i:02d}", "relation": "near", "relatum": f"hub{hub}"})

    for i in range(30):
        hub = i % 3
        hx, hy = anchors[hub][2], anchors[hub][3]
        angle = 2 * np.pi * (i + 0.5) / 11.0
        radius = 25.0 + (i % 5) * 12.0
        tx, ty = hx + radius * np.cos(angle), hy + radius * np.sin(angle)
        nodes.append({
            "id": f"n{i:02d}",
            "references": [f"{_NOISE[i % 6]} {_FIRST[i % 6]} spot {i}"],
            "annotation": {"label": "non-gazetteered", "truth_point": [tx, ty]},
        })
        edges.append({"locatum": f"n{i:02d}", "relation": "near", "relatum": f"hub{hub}"})

    graph_doc = {"nodes": nodes, "edges": edges}
    gaz_doc = {"type": "FeatureCollection", "features": features}
    annotations = {n["id"]: n["annotation"] for n in nodes}
    return graph_doc, gaz_doc, annotations


# --- synthetic two-foci disambiguation fixture ------------------------------

TWO_FOCI_SEEDS = tuple(range(10))


def two_foci_candidates(seed: int):
    """Anchor candidates with two planted foci plus ~10% uniform decoys.

    40 anchors have their true entry jittered inside one of two far-apart
    foci; 4 of them additionally carry a same-name decoy entry placed
    uniformly in the enclosing box (away from both foci). Returns the
    candidate map and the expected entry per anchor.
    """
    from shapely.geometry import Point

    from placeref.gazetteer import Footprint, GazetteerEntry

    rng = np.random.default_rng(seed)
    foci = [(0.0, 0.0), (20000.0, 12000.0)]
    box = (-5000.0, -5000.0, 25000.0, 17000.0)

    candidates: dict[str, list[GazetteerEntry]] = {}
    expected: dict[str, str] = {}
    for i in range(40):
        fx, fy = foci[0] if i < 20 else foci[1]
        x = fx + rng.uniform(-35.0, 35.0)
        y = fy + rng.uniform(-35.0, 35.0)
        true_entry = GazetteerEntry(
            entry_id=f"true-{i:02d}",
            name=f"Depot {i}",
            feature_type="",
            footprint=Footprint("point", Point(x, y)),
        )
        entries = [true_entry]
        if i < 4:  # ~10% of the cloud is uniform noise
            while True:
                dx = rng.uniform(box[0], box[2])
                dy = rng.uniform(box[1], box[3])
                if all(np.hypot(dx - cx, dy - cy) > 500.0 for cx, cy in foci):
                    break
            entries.append(
                GazetteerEntry(
                    entry_id=f"decoy-{i:02d}",
                    name=f"Depot {i}",
                    feature_type="",
                    footprint=Footprint("point", Point(dx, dy)),
                )
            )
        candidates[f"anchor-{i:02d}"] = entries
        expected[f"anchor-{i:02d}"] = f"true-{i:02d}"
    return candidates, expected
