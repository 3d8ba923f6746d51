"""Density-based disambiguation of anchor-place gazetteer candidates.

The candidate entry centroids of all anchor places form a point cloud. A
distance-interval density profile over annuli of width delta_d locates the
dominant inter-point spacing; the first interval at or beyond the density peak
whose value exceeds mean + 3 sigma becomes the cluster distance. Single-
linkage components under that distance are ranked by size, and anchors are
assigned the entry found in the best-ranking cluster.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NoClusterSignal, PlacerefError
from .gazetteer import GazetteerEntry
from .spatial import SpatialContext

_PARALLEL_MIN_POINTS = 256  # below this, chunking overhead dominates


@dataclass(frozen=True)
class TaggedPoint:
    """A candidate entry centroid, tagged with its owning anchor place."""

    x: float
    y: float
    place_id: str
    entry_id: str


@dataclass
class KFunctionProfile:
    """Annulus density profile K(d) over d = delta_d, 2*delta_d, ..."""

    delta_d: float
    distances: np.ndarray  # interval upper edges, meters
    counts: np.ndarray  # integer neighbor counts per annulus
    values: np.ndarray  # densities, 1/m^2
    n: int
    max_distance: float

    def as_pairs(self) -> list[tuple[float, float]]:
        return [(float(d), float(k)) for d, k in zip(self.distances, self.values)]


def k_function(points, delta_d: float, jobs: int = 1) -> KFunctionProfile:
    """Distance-interval density profile of a planar point set.

    For each interval end d the value is the mean, over all n points, of the
    number of other points at distance in (d - delta_d, d], divided by the
    annulus area. A point never counts itself; coincident duplicates fall in
    no interval.
    """
    xs, ys = _as_arrays(points)
    n = xs.size
    if n < 2:
        raise PlacerefError("density profile needs at least 2 points")
    if delta_d <= 0:
        raise PlacerefError("delta_d must be positive")

    max_distance = float(_kernels.max_pairwise_distance(xs, ys))
    nbins = max(1, int(math.ceil(max_distance / delta_d)))
    edges = (np.arange(nbins, dtype=np.float64) + 1.0) * delta_d

    counts = _counts_parallel(xs, ys, edges, jobs)

    inner = np.concatenate(([0.0], edges[:-1]))
    areas = math.pi * edges**2 - math.pi * inner**2
    values = counts / areas / n
    return KFunctionProfile(delta_d, edges, counts, values, n, max_distance)


def _counts_parallel(xs, ys, edges, jobs: int):
    n = xs.size
    if jobs <= 1 or n < _PARALLEL_MIN_POINTS:
        return _kernels.annulus_counts(xs, ys, edges)
    jobs = min(jobs, n)
    bounds = np.linspace(0, n, jobs + 1).astype(int)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        chunks = list(
            pool.map(lambda se: _kernels.annulus_counts(xs, ys, edges, se[0], se[1]),
                     zip(bounds[:-1], bounds[1:]))
        )
    # integer addition is associative: result identical for any jobs count
    return np.sum(chunks, axis=0)


def cluster_distance(profile: KFunctionProfile) -> float:
    """Minimum d with K(d) >= mean + 3 sigma and d at or beyond the peak.

    Sigma is the population standard deviation over all intervals. Raises
    NoClusterSignal when no interval satisfies both conditions.
    """
    values = profile.values
    threshold = float(values.mean() + 3.0 * values.std())
    argmax_d = float(profile.distances[int(np.argmax(values))])
    mask = (values >= threshold) & (profile.distances >= argmax_d)
    if not mask.any():
        raise NoClusterSignal("no interval exceeds the density threshold at or beyond the peak")
    return float(profile.distances[mask][0])


@dataclass(frozen=True)
class Cluster:
    members: tuple[TaggedPoint, ...]
    rank: int  # 1-based, by member count descending
    context: SpatialContext

    def entries_of(self, place_id: str) -> list[str]:
        return [p.entry_id for p in self.members if p.place_id == place_id]

    def __contains__(self, tag: tuple[str, str]) -> bool:
        return any((p.place_id, p.entry_id) == tag for p in self.members)


def compute_clusters(points: list[TaggedPoint], cutoff: float) -> list[Cluster]:
    """Single-linkage components under dist <= cutoff, singletons discarded.

    Ranked by size descending; ties broken by smaller bounding-box area, then
    lexicographically by member tags, so ranking is deterministic.
    """
    if not points:
        return []
    xs = np.array([p.x for p in points], dtype=np.float64)
    ys = np.array([p.y for p in points], dtype=np.float64)
    labels = _kernels.single_linkage_labels(xs, ys, cutoff)

    groups: dict[int, list[TaggedPoint]] = {}
    for point, label in zip(points, labels):
        groups.setdefault(int(label), []).append(point)

    kept = [g for g in groups.values() if len(g) >= 2]

    def sort_key(group: list[TaggedPoint]):
        ctx = SpatialContext.from_points([(p.x, p.y) for p in group])
        tags = tuple(sorted((p.place_id, p.entry_id) for p in group))
        return (-len(group), ctx.area, tags)

    kept.sort(key=sort_key)
    return [
        Cluster(
            members=tuple(group),
            rank=i + 1,
            context=SpatialContext.from_points([(p.x, p.y) for p in group]),
        )
        for i, group in enumerate(kept)
    ]


AMBIGUOUS = "ambiguous"
UNASSIGNED = "unassigned"


@dataclass
class DisambiguationResult:
    assignments: dict[str, str]  # place_id -> entry_id
    ambiguous: list[str]  # >1 entry inside the chosen cluster; deferred
    unassigned: list[str]  # entries in no cluster; deferred
    clusters: list[Cluster]
    profile: KFunctionProfile | None
    cluster_dist: float | None
    cloud: list[TaggedPoint]
    single_cluster_fallback: bool = False
    events: list[str] = field(default_factory=list)

    def global_context(self) -> SpatialContext:
        if self.cloud:
            return SpatialContext.from_points([(p.x, p.y) for p in self.cloud])
        raise PlacerefError("no candidate entries; no spatial context")

    def context_for(self, place_id: str) -> SpatialContext:
        """Spatial context of the cluster holding the place's assigned entry."""
        entry_id = self.assignments.get(place_id)
        if entry_id is not None:
            for cluster in self.clusters:
                if (place_id, entry_id) in cluster:
                    return cluster.context
        return self.global_context()

    def context_for_point(self, x: float, y: float) -> SpatialContext:
        """Context of the best-ranked cluster whose box contains the point."""
        for cluster in self.clusters:
            if cluster.context.contains_point(x, y):
                return cluster.context
        return self.global_context()


def disambiguate_anchors(
    anchor_candidates: dict[str, list[GazetteerEntry]],
    delta_d: float = 100.0,
    jobs: int = 1,
) -> DisambiguationResult:
    """Assign each anchor place one gazetteer entry via density clustering.

    All candidate entry centroids (including those of anchors that end up
    ambiguous) seed the point cloud. Anchors with a single candidate are
    assigned directly. Multi-candidate anchors are resolved by walking the
    ranked clusters: the first cluster containing exactly one of the anchor's
    entries decides; more than one inside that cluster defers the anchor as
    ambiguous. When no interval passes the density threshold, all points are
    treated as one cluster.
    """
    if not anchor_candidates:
        raise PlacerefError("no anchor candidates to disambiguate")

    cloud: list[TaggedPoint] = []
    for place_id, entries in anchor_candidates.items():
        for entry in entries:
            c = entry.footprint.centroid
            cloud.append(TaggedPoint(c.x, c.y, place_id, entry.entry_id))

    events: list[str] = []
    profile = None
    cdist = None
    fallback = False
    clusters: list[Cluster] = []
    if len(cloud) >= 2:
        profile = k_function(cloud, delta_d, jobs=jobs)
        try:
            cdist = cluster_distance(profile)
        except NoClusterSignal:
            cdist = profile.max_distance
            fallback = True
            events.append("no density signal; treating all candidate points as one cluster")
        if profile.values.std() == 0.0:
            events.append("degenerate flat density profile")
        clusters = compute_clusters(cloud, cdist)
        events.append(f"cluster distance {cdist:g} m; {len(clusters)} cluster(s)")

    assignments: dict[str, str] = {}
    ambiguous: list[str] = []
    pending: list[str] = []
    for place_id, entries in anchor_candidates.items():
        if not entries:
            continue
        if len(entries) == 1:
            assignments[place_id] = entries[0].entry_id
            events.append(f"{place_id}: single candidate {entries[0].entry_id}")
        else:
            pending.append(place_id)

    for cluster in clusters:
        for place_id in list(pending):
            found = [
                e.entry_id
                for e in anchor_candidates[place_id]
                if (place_id, e.entry_id) in cluster
            ]
            if len(found) == 1:
                assignments[place_id] = found[0]
                pending.remove(place_id)
                events.append(f"{place_id}: entry {found[0]} via cluster rank {cluster.rank}")
            elif len(found) > 1:
                ambiguous.append(place_id)
                pending.remove(place_id)
                events.append(f"{place_id}: {len(found)} entries in cluster rank {cluster.rank}; deferred")

    for place_id in pending:
        events.append(f"{place_id}: no entry inside any cluster; deferred")

    return DisambiguationResult(
        assignments=assignments,
        ambiguous=ambiguous,
        unassigned=pending,
        clusters=clusters,
        profile=profile,
        cluster_dist=cdist,
        cloud=cloud,
        single_cluster_fallback=fallback,
        events=events,
    )


def _as_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(points, np.ndarray):
        return points[:, 0].astype(np.float64), points[:, 1].astype(np.float64)
    if points and hasattr(points[0], "x"):
        pairs = [(p.x, p.y) for p in points]
    else:
        pairs = [(p[0], p[1]) for p in points]
    xs = np.array([p[0] for p in pairs], dtype=np.float64)
    ys = np.array([p[1] for p in pairs], dtype=np.float64)
    return xs, ys
