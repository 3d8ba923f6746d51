"""Metrics over geo-referencing results against manual annotations.

Annotations label each place anchor / gazetteered / non-gazetteered and carry
the ground-truth gazetteer entry (first two labels) or a ground-truth point
(non-gazetteered). All containment checks use closed regions: a point on the
boundary counts as covered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from shapely.geometry import Point, shape
from shapely.geometry.base import BaseGeometry

from .errors import AnnotationError
from .gazetteer import Gazetteer
from .pipeline import METHOD_ALR_ONLY, GeoreferenceResult

LABEL_ANCHOR = "anchor"
LABEL_GAZETTEERED = "gazetteered"
LABEL_NON_GAZETTEERED = "non-gazetteered"

SIMILARITY_STEPS = [round(0.1 * i, 1) for i in range(11)]


@dataclass(frozen=True)
class PlaceAnnotation:
    label: str
    truth_entry: str | None = None
    truth_point: tuple[float, float] | None = None

    def __post_init__(self):
        if self.label in (LABEL_ANCHOR, LABEL_GAZETTEERED) and not self.truth_entry:
            raise AnnotationError(f"label {self.label!r} requires truth_entry")
        if self.label == LABEL_NON_GAZETTEERED and self.truth_point is None:
            raise AnnotationError("label 'non-gazetteered' requires truth_point")


AnnotationSet = dict[str, PlaceAnnotation]


def load_annotations(document: dict | str | Path) -> AnnotationSet:
    """Parse an annotation JSON object: {place_id: {label, truth_entry?, truth_point?}}."""
    doc = _as_document(document)
    if not isinstance(doc, dict):
        raise AnnotationError("annotation document must be a JSON object")
    out: AnnotationSet = {}
    for place_id, raw in doc.items():
        if not isinstance(raw, dict) or "label" not in raw:
            raise AnnotationError(f"malformed annotation for {place_id!r}")
        label = raw["label"]
        if label not in (LABEL_ANCHOR, LABEL_GAZETTEERED, LABEL_NON_GAZETTEERED):
            raise AnnotationError(f"{place_id!r}: unknown label {label!r}")
        point = raw.get("truth_point")
        if point is not None:
            if (not isinstance(point, (list, tuple)) or len(point) != 2
                    or not all(isinstance(v, (int, float)) for v in point)):
                raise AnnotationError(f"{place_id!r}: truth_point must be [x, y]")
            point = (float(point[0]), float(point[1]))
        out[place_id] = PlaceAnnotation(
            label=label,
            truth_entry=raw.get("truth_entry"),
            truth_point=point,
        )
    return out


@dataclass(frozen=True)
class EvalRecord:
    """The slice of a result needed by the metrics, however it was loaded."""

    place_id: str
    method: str
    entry_id: str | None
    score: float | None
    alr: BaseGeometry | None


def records_from_results(results: list[GeoreferenceResult]) -> list[EvalRecord]:
    return [
        EvalRecord(
            place_id=r.place_id,
            method=r.method,
            entry_id=r.entry_id,
            score=r.score,
            alr=r.region.geom if r.region is not None else None,
        )
        for r in results
    ]


def records_from_geojson(doc: dict) -> list[EvalRecord]:
    records = []
    for feature in doc.get("features", []):
        props = feature.get("properties") or {}
        if "place_id" not in props or "method" not in props:
            raise AnnotationError(f"result feature missing place_id/method: {props!r}")
        alr = props.get("alr")
        records.append(
            EvalRecord(
                place_id=props["place_id"],
                method=props["method"],
                entry_id=props.get("entry_id"),
                score=props.get("score"),
                alr=shape(alr) if alr else None,
            )
        )
    return records


@dataclass(frozen=True)
class Ratio:
    """A metric with its denominator; value is None when the class is empty."""

    numerator: int
    denominator: int

    @property
    def value(self) -> float | None:
        return None if self.denominator == 0 else self.numerator / self.denominator


def check_coverage(records: list[EvalRecord], annotations: AnnotationSet) -> None:
    """Every result place must be annotated and vice versa."""
    result_ids = {r.place_id for r in records}
    missing = sorted(result_ids - annotations.keys())
    extra = sorted(annotations.keys() - result_ids)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"unannotated places: {', '.join(missing)}")
        if extra:
            parts.append(f"annotated but absent from results: {', '.join(extra)}")
        raise AnnotationError("; ".join(parts))


def precision_anchors(records: list[EvalRecord], annotations: AnnotationSet) -> Ratio:
    """Fraction of annotated anchor places geo-referenced to their true entry.

    Recall is meaningless here: annotation and geo-referencing draw on the
    same gazetteer.
    """
    by_id = {r.place_id: r for r in records}
    anchor_ids = [pid for pid, ann in annotations.items() if ann.label == LABEL_ANCHOR]
    correct = 0
    for pid in anchor_ids:
        if pid not in by_id:
            raise AnnotationError(f"annotated anchor {pid!r} missing from results")
        record = by_id[pid]
        if record.entry_id is not None and record.entry_id == annotations[pid].truth_entry:
            correct += 1
    return Ratio(correct, len(anchor_ids))


def alr_precision(
    records: list[EvalRecord],
    annotations: AnnotationSet,
    subset_label: str,
    gazetteer: Gazetteer | None = None,
) -> Ratio:
    """Fraction of subset places whose constraint region covers the truth.

    Truth is the gazetteer entry footprint for gazetteered places (requires
    the gazetteer) and the annotated point for non-gazetteered places. Places
    without a retained region count as not covered.
    """
    by_id = {r.place_id: r for r in records}
    subset = [pid for pid, ann in annotations.items() if ann.label == subset_label]
    covered = 0
    for pid in subset:
        ann = annotations[pid]
        truth = _truth_geometry(pid, ann, gazetteer)
        record = by_id.get(pid)
        if record is not None and record.alr is not None and record.alr.covers(truth):
            covered += 1
    return Ratio(covered, len(subset))


def _truth_geometry(place_id: str, ann: PlaceAnnotation, gazetteer: Gazetteer | None) -> BaseGeometry:
    if ann.label == LABEL_NON_GAZETTEERED:
        return Point(ann.truth_point)
    if gazetteer is None:
        raise AnnotationError(
            f"{place_id!r}: a gazetteer is required to resolve truth entry footprints"
        )
    return gazetteer.entry(ann.truth_entry).footprint.geom


def precision_by_similarity(
    records: list[EvalRecord],
    annotations: AnnotationSet,
    steps: list[float] | None = None,
) -> list[tuple[float, Ratio]]:
    """Precision over gazetteered places matched with score >= s, per s.

    Thresholds with an empty bucket are omitted from the curve.
    """
    steps = SIMILARITY_STEPS if steps is None else steps
    scored = []
    for r in records:
        ann = annotations.get(r.place_id)
        if ann is not None and ann.label == LABEL_GAZETTEERED and r.score is not None:
            scored.append((r, ann))
    curve = []
    for s in steps:
        bucket = [(r, ann) for r, ann in scored if r.score >= s]
        if not bucket:
            continue
        correct = sum(1 for r, ann in bucket if r.entry_id == ann.truth_entry)
        curve.append((s, Ratio(correct, len(bucket))))
    return curve


def recall_tradeoff(
    records: list[EvalRecord],
    annotations: AnnotationSet,
    thresholds: list[float],
) -> list[tuple[float, Ratio, Ratio]]:
    """Per threshold: recall of the gazetteered and non-gazetteered classes.

    A scored place is classified gazetteered at tau iff score >= tau; places
    geo-referenced by region alone are always classified non-gazetteered;
    unresolved places are counted correct for neither class.
    """
    gaz_ids = [pid for pid, ann in annotations.items() if ann.label == LABEL_GAZETTEERED]
    non_ids = [pid for pid, ann in annotations.items() if ann.label == LABEL_NON_GAZETTEERED]
    by_id = {r.place_id: r for r in records}

    rows = []
    for tau in thresholds:
        gaz_ok = sum(
            1
            for pid in gaz_ids
            if (r := by_id.get(pid)) is not None and r.score is not None and r.score >= tau
        )
        non_ok = sum(
            1
            for pid in non_ids
            if (r := by_id.get(pid)) is not None
            and (
                (r.score is not None and r.score < tau)
                or (r.score is None and r.method == METHOD_ALR_ONLY)
            )
        )
        rows.append((tau, Ratio(gaz_ok, len(gaz_ids)), Ratio(non_ok, len(non_ids))))
    return rows


def _as_document(document: dict | str | Path):
    if isinstance(document, dict):
        return document
    if isinstance(document, Path):
        text = document.read_text("utf-8")
    else:
        text = document
        if "{" not in text:
            path = Path(text)
            if not path.exists():
                raise AnnotationError(f"no such annotation file: {text!r}")
            text = path.read_text("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"invalid JSON: {exc}") from exc
