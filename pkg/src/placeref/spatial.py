"""Search spaces, constraint regions, and spatial similarity measures.

Each spatial relationship to an already geo-referenced relatum constrains a
locatum to a planar region (its search space): half-planes for cardinal
directions, a buffered region for nearness, the relatum polygon for
containment-style topology, and a frontal wedge intersected with the near
buffer for relative directions with a known reference frame. The intersection
of a place's search spaces is its approximate location region (ALR).

Unbounded ideals (half-planes, whole-plane complements) are clipped to a
finite window derived from the relatum's spatial context before any boolean
operation; bounded regions are used as-is.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from shapely.geometry import GeometryCollection, MultiPolygon, Point, Polygon, box
from shapely.geometry.base import BaseGeometry

from .errors import NoSearchSpaceError, PlacerefError
from .gazetteer import Footprint
from .graph import RelationFamily, RelationKind

logger = logging.getLogger(__name__)

BUFFER_QUAD_SEGS = 16  # 64-gon discs; area within 1% of a true disc

# Unit direction vectors in planar meters (north = +y, east = +x).
_SQ2 = math.sqrt(0.5)
CARDINAL_DIRECTIONS: dict[RelationKind, tuple[float, float]] = {
    RelationKind.NORTH_OF: (0.0, 1.0),
    RelationKind.SOUTH_OF: (0.0, -1.0),
    RelationKind.EAST_OF: (1.0, 0.0),
    RelationKind.WEST_OF: (-1.0, 0.0),
    RelationKind.NORTH_EAST_OF: (_SQ2, _SQ2),
    RelationKind.NORTH_WEST_OF: (-_SQ2, _SQ2),
    RelationKind.SOUTH_EAST_OF: (_SQ2, -_SQ2),
    RelationKind.SOUTH_WEST_OF: (-_SQ2, -_SQ2),
}

COMPOSITE_CARDINALS = {
    RelationKind.NORTH_EAST_OF,
    RelationKind.NORTH_WEST_OF,
    RelationKind.SOUTH_EAST_OF,
    RelationKind.SOUTH_WEST_OF,
}

# Offsets (degrees, counterclockwise) from the "front" frame direction.
RELATIVE_OFFSETS = {
    RelationKind.IN_FRONT_OF: 0.0,
    RelationKind.LEFT_OF: 90.0,
    RelationKind.BEHIND: 180.0,
    RelationKind.RIGHT_OF: -90.0,
}

# Topological relations whose search space is the relatum polygon itself.
CONTAINMENT_KINDS = {RelationKind.INSIDE, RelationKind.COVERED_BY, RelationKind.EQUAL}

# Relaxation priority when an ALR intersection comes up empty: frame-ambiguous
# relations are discarded first, topological constraints last.
_RELAX_PRIORITY = {
    RelationFamily.RELATIVE: 0,
    RelationFamily.CARDINAL: 1,
    RelationFamily.DISTANCE: 2,
    RelationFamily.TOPOLOGICAL: 3,
}


@dataclass(frozen=True)
class NearBufferConfig:
    """Buffer distance model: d = alpha + beta*area(relatum) + gamma*area(context)."""

    alpha: float = 100.0
    beta: float = 1e-3
    gamma: float = 5e-5

    def __post_init__(self):
        if self.alpha <= 0 or self.beta < 0 or self.gamma < 0:
            raise PlacerefError("near-buffer config requires alpha > 0 and beta, gamma >= 0")


@dataclass(frozen=True)
class SpatialContext:
    """Minimal bounding box of a cluster's points; scales the near buffer."""

    minx: float
    miny: float
    maxx: float
    maxy: float

    @classmethod
    def from_points(cls, points: Sequence[tuple[float, float]]) -> "SpatialContext":
        if not points:
            raise PlacerefError("spatial context needs at least one point")
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        return cls(min(xs), min(ys), max(xs), max(ys))

    @property
    def area(self) -> float:
        return (self.maxx - self.minx) * (self.maxy - self.miny)

    def contains_point(self, x: float, y: float) -> bool:
        return self.minx <= x <= self.maxx and self.miny <= y <= self.maxy


@dataclass(frozen=True)
class Region:
    """A planar region as a (multi)polygon in meters.

    ``unbounded`` marks regions derived from unbounded ideals (half-planes,
    whole-plane complements) that were rendered finite by window clipping.
    """

    geom: BaseGeometry
    unbounded: bool = False

    @property
    def area(self) -> float:
        return float(self.geom.area)

    @property
    def is_empty(self) -> bool:
        return self.geom.is_empty or self.geom.area <= 0.0

    def intersection(self, other: "Region") -> "Region":
        return Region(_polygonal(self.geom.intersection(other.geom)), self.unbounded and other.unbounded)

    def union(self, other: "Region") -> "Region":
        return Region(_polygonal(self.geom.union(other.geom)), self.unbounded or other.unbounded)

    def covers_point(self, x: float, y: float) -> bool:
        return bool(self.geom.covers(Point(x, y)))


def _polygonal(geom: BaseGeometry) -> BaseGeometry:
    """Strip zero-area residue (points/lines) from a boolean-op result."""
    if isinstance(geom, (Polygon, MultiPolygon)):
        return geom
    if isinstance(geom, GeometryCollection):
        polys = [g for g in geom.geoms if isinstance(g, (Polygon, MultiPolygon))]
        if not polys:
            return Polygon()
        out = polys[0]
        for g in polys[1:]:
            out = out.union(g)
        return out
    return Polygon()


@dataclass(frozen=True)
class SearchSpace:
    kind: RelationKind
    relatum_entry_id: str
    region: Region
    constraining: bool
    window: Region | None = field(repr=False, default=None)  # clip window used
    label: str = ""


def buffer_distance(relatum: Footprint, context: SpatialContext, cfg: NearBufferConfig) -> float:
    """Near-buffer distance in meters; strictly positive."""
    return cfg.alpha + cfg.beta * relatum.area + cfg.gamma * context.area


def clip_window(relatum: Footprint, context: SpatialContext, d: float) -> Region:
    """Finite window for rendering unbounded regions.

    Covers the context box and the relatum's near buffer, then extends each
    side by 50% of the axis extent. Clipping therefore stays outside the
    plausible candidate space.
    """
    gminx, gminy, gmaxx, gmaxy = relatum.geom.bounds
    minx = min(context.minx, gminx - d)
    miny = min(context.miny, gminy - d)
    maxx = max(context.maxx, gmaxx + d)
    maxy = max(context.maxy, gmaxy + d)
    padx = 0.5 * max(maxx - minx, 1.0)
    pady = 0.5 * max(maxy - miny, 1.0)
    return Region(box(minx - padx, miny - pady, maxx + padx, maxy + pady), unbounded=True)


def _half_plane(cx: float, cy: float, ux: float, uy: float, window: Region) -> BaseGeometry:
    """The half-plane {p : (p - c) . u >= 0} clipped to the window."""
    wminx, wminy, wmaxx, wmaxy = window.geom.bounds
    reach = 2.0 * (
        math.hypot(wmaxx - wminx, wmaxy - wminy)
        + math.hypot(cx - 0.5 * (wminx + wmaxx), cy - 0.5 * (wminy + wmaxy))
        + 1.0
    )
    # Rectangle covering the positive side of the boundary line out to `reach`.
    vx, vy = -uy, ux
    p0 = (cx - reach * vx, cy - reach * vy)
    p1 = (cx + reach * vx, cy + reach * vy)
    p2 = (p1[0] + reach * ux, p1[1] + reach * uy)
    p3 = (p0[0] + reach * ux, p0[1] + reach * uy)
    return _polygonal(Polygon([p0, p1, p2, p3]).intersection(window.geom))


def frame_direction(angle_deg: float) -> tuple[float, float]:
    """Unit vector for a frame bearing given in degrees clockwise from north."""
    rad = math.radians(angle_deg)
    return (math.sin(rad), math.cos(rad))


def search_space(
    kind: RelationKind,
    relatum: Footprint,
    context: SpatialContext,
    cfg: NearBufferConfig,
    *,
    relatum_entry_id: str = "",
    frame_deg: float | None = None,
    label: str = "",
) -> SearchSpace:
    """Construct the search space for one relationship to a geo-referenced relatum.

    Raises NoSearchSpaceError for topological relations with a non-polygon
    relatum. Relative directions without a pinned reference frame fall back to
    the near space.
    """
    d = buffer_distance(relatum, context, cfg)
    window = clip_window(relatum, context, d)
    c = relatum.centroid
    family = kind.family

    if family == RelationFamily.CARDINAL:
        geom = _cardinal_geom(kind, c.x, c.y, window)
        return SearchSpace(kind, relatum_entry_id, Region(geom, unbounded=True), True, window, label)

    if family == RelationFamily.DISTANCE:
        buffered = relatum.geom.buffer(d, quad_segs=BUFFER_QUAD_SEGS)
        return SearchSpace(kind, relatum_entry_id, Region(buffered), True, window, label)

    if family == RelationFamily.RELATIVE:
        buffered = relatum.geom.buffer(d, quad_segs=BUFFER_QUAD_SEGS)
        if frame_deg is None:
            return SearchSpace(kind, relatum_entry_id, Region(buffered), True, window, label)
        bearing = frame_deg - RELATIVE_OFFSETS[kind]  # clockwise bearings
        ux1, uy1 = frame_direction(bearing - 45.0)
        ux2, uy2 = frame_direction(bearing + 45.0)
        wedge = _half_plane(c.x, c.y, ux1, uy1, window).intersection(
            _half_plane(c.x, c.y, ux2, uy2, window)
        )
        return SearchSpace(kind, relatum_entry_id, Region(_polygonal(wedge.intersection(buffered))), True, window, label)

    # topological
    if not relatum.is_polygon:
        raise NoSearchSpaceError(f"topological relation {kind.label} needs a polygon relatum")
    if kind in CONTAINMENT_KINDS:
        return SearchSpace(kind, relatum_entry_id, Region(relatum.geom), True, window, label)
    # disjoint/meet/overlap/cover/contain: the space cannot be bounded; the
    # relation is enforced later by the topological similarity filter.
    return SearchSpace(kind, relatum_entry_id, window, False, window, label)


def _cardinal_geom(kind: RelationKind, cx: float, cy: float, window: Region) -> BaseGeometry:
    ux, uy = CARDINAL_DIRECTIONS[kind]
    if kind in COMPOSITE_CARDINALS:
        # Composite direction = intersection of the two principal half-planes.
        sx = 1.0 if ux > 0 else -1.0
        sy = 1.0 if uy > 0 else -1.0
        return _polygonal(
            _half_plane(cx, cy, sx, 0.0, window).intersection(_half_plane(cx, cy, 0.0, sy, window))
        )
    return _half_plane(cx, cy, ux, uy, window)


@dataclass
class AlrDerivation:
    region: Region
    relaxed: list[SearchSpace] = field(default_factory=list)
    low_confidence: bool = False


def derive_alr(spaces: Sequence[SearchSpace]) -> AlrDerivation:
    """Intersect a place's search spaces into its approximate location region.

    Non-constraining spaces contribute nothing here (their relations are
    enforced by the topological similarity filter). With no constraining space
    at all the clipped context window is returned, flagged low-confidence. An
    empty intersection triggers constraint relaxation: constraining spaces are
    dropped one at a time (relative, then cardinal, then near, topological
    last) until the intersection is non-empty.
    """
    if not spaces:
        raise PlacerefError("cannot derive a region from zero search spaces")

    constraining = [s for s in spaces if s.constraining]
    if not constraining:
        region = spaces[0].window
        for s in spaces[1:]:
            region = region.intersection(s.window)
        return AlrDerivation(region, [], low_confidence=True)

    region = _intersect_all(constraining)
    if not region.is_empty:
        return AlrDerivation(region)

    order = sorted(
        range(len(constraining)),
        key=lambda i: (_RELAX_PRIORITY[constraining[i].kind.family], i),
    )
    active = list(range(len(constraining)))
    relaxed: list[SearchSpace] = []
    for idx in order:
        if len(active) <= 1:
            break
        active.remove(idx)
        relaxed.append(constraining[idx])
        region = _intersect_all([constraining[i] for i in active])
        if not region.is_empty:
            logger.warning("relaxed %d contradictory constraint(s)", len(relaxed))
            return AlrDerivation(region, relaxed)
    # Even single spaces are empty; fall back to the clipped window.
    window = constraining[0].window
    for s in constraining[1:]:
        window = window.intersection(s.window)
    return AlrDerivation(window, relaxed, low_confidence=True)


def _intersect_all(spaces: Sequence[SearchSpace]) -> Region:
    region = spaces[0].region
    for s in spaces[1:]:
        region = region.intersection(s.region)
    return region


# ---------------------------------------------------------------------------
# similarity measures
# ---------------------------------------------------------------------------


def orientation_similarity(
    kind: RelationKind,
    locatum_pt: tuple[float, float],
    relatum_pt: tuple[float, float],
    frame_deg: float | None = None,
) -> float:
    """Angular agreement between the relatum-to-locatum displacement and the
    ideal direction, mapped linearly to [0, 1].

    The score reaches 1.0 at 0 degrees and 0.0 at 90 degrees for principal
    directions (45 degrees for composite ones). Coincident points score 1.0
    with a warning, since the bearing is undefined.
    """
    if kind.family == RelationFamily.CARDINAL:
        ux, uy = CARDINAL_DIRECTIONS[kind]
        theta_max = 45.0 if kind in COMPOSITE_CARDINALS else 90.0
    elif kind.family == RelationFamily.RELATIVE and frame_deg is not None:
        ux, uy = frame_direction(frame_deg - RELATIVE_OFFSETS[kind])
        theta_max = 90.0
    else:
        raise PlacerefError(f"orientation similarity undefined for {kind.label}")

    dx = locatum_pt[0] - relatum_pt[0]
    dy = locatum_pt[1] - relatum_pt[1]
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        logger.warning("coincident locatum/relatum centroids; orientation defaults to 1.0")
        return 1.0
    cos_theta = max(-1.0, min(1.0, (dx * ux + dy * uy) / norm))
    theta = math.degrees(math.acos(cos_theta))
    return max(0.0, 1.0 - theta / theta_max)


def nearness_similarity(locatum_pt: tuple[float, float], relatum: Footprint, d: float) -> float:
    """1 at the relatum centroid, 0 at (or beyond) the buffer distance."""
    if d <= 0:
        raise PlacerefError("buffer distance must be positive")
    c = relatum.centroid
    dist = math.hypot(locatum_pt[0] - c.x, locatum_pt[1] - c.y)
    return max(0.0, min(1.0, 1.0 - dist / d))


def topological_similarity(kind: RelationKind, locatum: Footprint, relatum: Footprint) -> float | None:
    """1.0 if the polygon pair satisfies the relation, 0.0 if not.

    Returns None (skip) when either geometry is not a polygon; the relation
    then contributes nothing to the spatial similarity average.
    """
    if kind.family != RelationFamily.TOPOLOGICAL:
        raise PlacerefError(f"{kind.label} is not a topological relation")
    if not (locatum.is_polygon and relatum.is_polygon):
        return None
    return 1.0 if topology_holds(kind, locatum.geom, relatum.geom) else 0.0


def topology_holds(kind: RelationKind, a: BaseGeometry, b: BaseGeometry) -> bool:
    """The eight-relation region calculus on polygon pairs (a = locatum)."""
    if kind == RelationKind.EQUAL:
        return a.equals(b)
    if kind == RelationKind.DISJOINT:
        return a.disjoint(b)
    if kind == RelationKind.MEET:
        return a.touches(b)
    if kind == RelationKind.OVERLAP:
        return a.overlaps(b)
    if kind == RelationKind.INSIDE:
        return a.within(b) and not a.boundary.intersects(b.boundary)
    if kind == RelationKind.COVERED_BY:
        return a.within(b) and a.boundary.intersects(b.boundary) and not a.equals(b)
    if kind == RelationKind.CONTAIN:
        return topology_holds(RelationKind.INSIDE, b, a)
    if kind == RelationKind.COVER:
        return topology_holds(RelationKind.COVERED_BY, b, a)
    raise PlacerefError(f"not a topological kind: {kind.label}")


@dataclass(frozen=True)
class AnchoredRelation:
    """One relationship of the scored place, resolved against an anchor."""

    kind: RelationKind
    relatum: Footprint
    buffer_dist: float
    frame_deg: float | None = None
    label: str = ""


@dataclass
class SpatialScore:
    score: float
    parts: list[tuple[str, float | None]]  # (label, component score or None if skipped)
    all_skipped: bool = False
    filtered: bool = False  # an unsatisfied topological relation zeroed the score


NEUTRAL_SPATIAL_SCORE = 0.5


def spatial_similarity_detail(candidate: Footprint, relations: Sequence[AnchoredRelation]) -> SpatialScore:
    """Per-relation satisfaction scores averaged into one spatial similarity.

    An unsatisfied topological relation filters the candidate outright (score
    0). Topological relations on non-polygon pairs are skipped and excluded
    from the average; if every relation is skipped the neutral score 0.5 is
    returned so that reference similarity alone decides the ranking.
    """
    if not relations:
        raise PlacerefError("spatial similarity needs at least one relation")
    c = candidate.centroid
    loc = (c.x, c.y)
    parts: list[tuple[str, float | None]] = []
    kept: list[float] = []
    for rel in relations:
        family = rel.kind.family
        if family == RelationFamily.CARDINAL:
            sim = orientation_similarity(rel.kind, loc, _pt(rel.relatum))
        elif family == RelationFamily.DISTANCE:
            sim = nearness_similarity(loc, rel.relatum, rel.buffer_dist)
        elif family == RelationFamily.RELATIVE:
            near_sim = nearness_similarity(loc, rel.relatum, rel.buffer_dist)
            if rel.frame_deg is None:
                sim = near_sim
            else:
                sim = 0.5 * (near_sim + orientation_similarity(rel.kind, loc, _pt(rel.relatum), rel.frame_deg))
        else:
            sim = topological_similarity(rel.kind, candidate, rel.relatum)
            if sim is None:
                parts.append((rel.label or rel.kind.label, None))
                continue
            if sim == 0.0:
                parts.append((rel.label or rel.kind.label, 0.0))
                return SpatialScore(0.0, parts, filtered=True)
        parts.append((rel.label or rel.kind.label, sim))
        kept.append(sim)
    if not kept:
        return SpatialScore(NEUTRAL_SPATIAL_SCORE, parts, all_skipped=True)
    return SpatialScore(sum(kept) / len(kept), parts)


def spatial_similarity(candidate: Footprint, relations: Sequence[AnchoredRelation]) -> float:
    return spatial_similarity_detail(candidate, relations).score


def _pt(fp: Footprint) -> tuple[float, float]:
    c = fp.centroid
    return (c.x, c.y)
