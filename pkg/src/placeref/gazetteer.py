"""File-backed gazetteer: exact-name lookup and region queries over footprints.

Input is a GeoJSON FeatureCollection. Coordinates are either WGS84 (default,
projected to planar meters with a local equirectangular projection about the
dataset centroid) or already planar (``projected=True``). All downstream
geometry operates in meters.
"""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from shapely.geometry import LineString, Point, Polygon
from shapely.geometry.base import BaseGeometry
from shapely.strtree import STRtree

from .errors import GazetteerFormatError, GeometryError

EARTH_RADIUS_M = 6_371_000.0

GEOMETRY_KINDS = ("point", "polyline", "polygon")


def normalize_name(name: str) -> str:
    """Casefold, strip diacritics, and collapse whitespace for exact lookup."""
    decomposed = unicodedata.normalize("NFKD", name)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return " ".join(stripped.casefold().split())


@dataclass(frozen=True)
class Projection:
    """Local equirectangular projection about (lat0, lon0); exact inverse."""

    lat0: float
    lon0: float
    radius: float = EARTH_RADIUS_M

    def forward(self, lon: float, lat: float) -> tuple[float, float]:
        k = math.pi / 180.0 * self.radius
        return ((lon - self.lon0) * k * math.cos(math.radians(self.lat0)), (lat - self.lat0) * k)

    def inverse(self, x: float, y: float) -> tuple[float, float]:
        k = math.pi / 180.0 * self.radius
        return (self.lon0 + x / (k * math.cos(math.radians(self.lat0))), self.lat0 + y / k)


IDENTITY_PROJECTION = None  # sentinel: coordinates already planar


@dataclass(frozen=True)
class Footprint:
    """A gazetteer footprint geometry in planar meters."""

    kind: str  # point | polyline | polygon
    geom: BaseGeometry

    @property
    def centroid(self) -> Point:
        if self.kind == "point":
            return self.geom
        if self.kind == "polyline":
            # midpoint by arc length
            return self.geom.interpolate(0.5, normalized=True)
        return self.geom.centroid

    @property
    def area(self) -> float:
        return float(self.geom.area)

    @property
    def is_polygon(self) -> bool:
        return self.kind == "polygon"


def footprint_from_geojson(geometry: dict, project) -> Footprint:
    """Build a validated Footprint from a GeoJSON geometry object."""
    if not isinstance(geometry, dict) or "type" not in geometry:
        raise GazetteerFormatError(f"malformed geometry: {geometry!r}")
    try:
        return _parse_geometry(geometry, project)
    except (TypeError, IndexError, ValueError) as exc:
        raise GazetteerFormatError(f"malformed coordinates in {geometry.get('type')} geometry: {exc}") from exc


def _parse_geometry(geometry: dict, project) -> Footprint:
    gtype = geometry["type"]
    coords = geometry.get("coordinates")
    if gtype == "Point":
        x, y = project(coords[0], coords[1])
        return Footprint("point", Point(x, y))
    if gtype == "LineString":
        pts = [project(c[0], c[1]) for c in coords]
        if len(pts) < 2:
            raise GeometryError("polyline needs at least 2 vertices")
        return Footprint("polyline", LineString(pts))
    if gtype == "Polygon":
        if not coords or len(coords[0]) < 4:
            raise GeometryError("polygon ring needs at least 3 distinct vertices")
        shell = [project(c[0], c[1]) for c in coords[0]]
        holes = [[project(c[0], c[1]) for c in ring] for ring in coords[1:]]
        poly = Polygon(shell, holes)
        if not poly.is_valid:
            raise GeometryError("invalid polygon: self-intersecting or degenerate ring")
        if poly.area <= 0.0:
            raise GeometryError("polygon has zero area")
        return Footprint("polygon", poly)
    raise GazetteerFormatError(f"unsupported geometry type: {gtype!r}")


@dataclass(frozen=True)
class GazetteerEntry:
    entry_id: str
    name: str
    feature_type: str
    footprint: Footprint
    tags: dict[str, str] = field(default_factory=dict)


class Gazetteer:
    """Immutable store of gazetteer entries with name and region indexes."""

    def __init__(self, entries: list[GazetteerEntry], projection: Projection | None = None):
        self.entries = list(entries)
        self.projection = projection
        self._by_id = {e.entry_id: e for e in self.entries}
        self._by_name: dict[str, list[GazetteerEntry]] = {}
        for entry in self.entries:
            self._by_name.setdefault(normalize_name(entry.name), []).append(entry)
        self._tree = STRtree([e.footprint.geom for e in self.entries]) if self.entries else None

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, entry_id: str) -> GazetteerEntry:
        try:
            return self._by_id[entry_id]
        except KeyError:
            raise GazetteerFormatError(f"unknown gazetteer entry id: {entry_id!r}") from None

    def lookup_exact(self, reference: str) -> list[GazetteerEntry]:
        """Entries whose normalized name equals the normalized reference.

        An empty result signals a non-gazetteered reference; it is not an
        error.
        """
        return list(self._by_name.get(normalize_name(reference), ()))

    def query_region(self, region: BaseGeometry) -> list[GazetteerEntry]:
        """Entries whose footprint intersects ``region``, ordered by entry_id."""
        if self._tree is None or region.is_empty:
            return []
        idx = self._tree.query(region, predicate="intersects")
        hits = [self.entries[i] for i in idx]
        hits.sort(key=lambda e: e.entry_id)
        return hits


def load_gazetteer(document: dict | str | Path, *, projected: bool = False) -> Gazetteer:
    """Load and validate a GeoJSON FeatureCollection into a Gazetteer.

    With ``projected=False`` coordinates are treated as WGS84 lon/lat and
    projected to planar meters about the dataset centroid.
    """
    doc = _as_document(document)
    if doc.get("type") != "FeatureCollection" or not isinstance(doc.get("features"), list):
        raise GazetteerFormatError("document must be a GeoJSON FeatureCollection")
    features = doc["features"]

    projection: Projection | None = None
    if not projected and features:
        lon0, lat0 = _dataset_centroid(features)
        projection = Projection(lat0=lat0, lon0=lon0)

    project = projection.forward if projection else (lambda lon, lat: (lon, lat))

    entries: list[GazetteerEntry] = []
    seen: set[str] = set()
    for feature in features:
        props = feature.get("properties") or {}
        if "id" not in props or "name" not in props:
            raise GazetteerFormatError(f"feature missing required properties.id/.name: {props!r}")
        entry_id = str(props["id"])
        if entry_id in seen:
            raise GazetteerFormatError(f"duplicate entry id: {entry_id!r}")
        seen.add(entry_id)
        name = str(props["name"])
        if not name.strip():
            raise GazetteerFormatError(f"entry {entry_id!r} has an empty name")
        tags = props.get("tags") or {}
        if not isinstance(tags, dict):
            raise GazetteerFormatError(f"entry {entry_id!r}: tags must be an object")
        entries.append(
            GazetteerEntry(
                entry_id=entry_id,
                name=name,
                feature_type=str(props.get("feature_type", "")),
                footprint=footprint_from_geojson(feature.get("geometry"), project),
                tags={str(k): str(v) for k, v in tags.items()},
            )
        )
    return Gazetteer(entries, projection)


def _dataset_centroid(features: list[dict]) -> tuple[float, float]:
    xs, ys = [], []
    for feature in features:
        geom = feature.get("geometry") or {}
        coords = geom.get("coordinates")
        if coords is None:
            continue
        flat = _flatten_coords(coords)
        xs.extend(c[0] for c in flat)
        ys.extend(c[1] for c in flat)
    if not xs:
        return 0.0, 0.0
    return sum(xs) / len(xs), sum(ys) / len(ys)


def _flatten_coords(coords) -> list[tuple[float, float]]:
    if not isinstance(coords, (list, tuple)) or not coords:
        raise GazetteerFormatError(f"malformed coordinates: {coords!r}")
    if isinstance(coords[0], (int, float)):
        if len(coords) < 2 or not isinstance(coords[1], (int, float)):
            raise GazetteerFormatError(f"malformed coordinate pair: {coords!r}")
        return [(coords[0], coords[1])]
    out = []
    for sub in coords:
        out.extend(_flatten_coords(sub))
    return out


def _as_document(document: dict | str | Path) -> dict:
    if isinstance(document, dict):
        return document
    if isinstance(document, Path):
        text = document.read_text("utf-8")
    else:
        text = document
        if "{" not in text:
            path = Path(text)
            if not path.exists():
                raise GazetteerFormatError(f"no such gazetteer file: {text!r}")
            text = path.read_text("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GazetteerFormatError(f"invalid JSON: {exc}") from exc
