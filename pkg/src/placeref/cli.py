"""Command-line interface: georeference, evaluate, inspect.

Configuration precedence is CLI flags over config-file entries over built-in
defaults. Every georeference run writes a manifest (input hashes and the
fully resolved configuration) next to the output; runs with identical
manifests produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import PlacerefError, UnknownPlaceError
from .evaluation import (
    LABEL_GAZETTEERED,
    LABEL_NON_GAZETTEERED,
    alr_precision,
    check_coverage,
    load_annotations,
    precision_anchors,
    precision_by_similarity,
    records_from_geojson,
    recall_tradeoff,
)
from .gazetteer import load_gazetteer
from .graph import load_place_graph
from .matching import MatchWeights, SemanticDictionary
from .pipeline import (
    PipelineConfig,
    METHOD_UNRESOLVED,
    results_to_geojson,
    run_pipeline,
)
from .spatial import NearBufferConfig

EXIT_OK = 0
EXIT_NO_ANCHORS = 2
EXIT_INVALID = 3

_DEFAULTS = {
    "weights": "0.7,0.3",
    "threshold": 0.7,
    "delta_d": 100.0,
    "near_alpha": 100.0,
    "near_beta": 1e-3,
    "near_gamma": 5e-5,
    "jobs": os.cpu_count() or 1,
    "strict": False,
    "projected": False,
    "promotion": True,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap to the validation code
        return EXIT_INVALID if exc.code not in (0, None) else 0
    try:
        return args.handler(args)
    except PlacerefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="placeref",
        description="Geo-reference every place in a place graph against a gazetteer.",
    )
    parser.add_argument("--version", action="version", version=f"placeref {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    geo = sub.add_parser("georeference", help="run the geo-referencing pipeline")
    _add_common_inputs(geo)
    geo.add_argument("--out", required=True, help="output GeoJSON path")
    _add_config_flags(geo)
    geo.add_argument("--dump-alr", metavar="DIR", help="write each place's constraint region as GeoJSON")
    geo.add_argument("--dump-kfunction", metavar="FILE", help="write the density profile as CSV (d, K)")
    geo.add_argument("--dump-clusters", metavar="FILE", help="write cluster bounding boxes as GeoJSON")
    geo.set_defaults(handler=_cmd_georeference)

    ev = sub.add_parser("evaluate", help="compute metrics for a results file")
    ev.add_argument("--results", required=True, help="result GeoJSON from a georeference run")
    ev.add_argument("--annotations", required=True, help="annotation JSON")
    ev.add_argument("--gazetteer", help="gazetteer GeoJSON (needed for truth entry footprints)")
    ev.add_argument("--out", required=True, help="metrics JSON path (CSV curves written alongside)")
    ev.add_argument("--thresholds", default="0.0:1.0:0.1", metavar="START:STOP:STEP",
                    help="recall trade-off thresholds (default 0.0:1.0:0.1)")
    ev.set_defaults(handler=_cmd_evaluate)

    ins = sub.add_parser("inspect", help="print one place's pipeline trace")
    _add_common_inputs(ins)
    ins.add_argument("--place", required=True, help="place id to inspect")
    _add_config_flags(ins)
    ins.set_defaults(handler=_cmd_inspect)
    return parser


def _add_common_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="place-graph JSON")
    p.add_argument("--gazetteer", required=True, help="gazetteer GeoJSON FeatureCollection")
    p.add_argument("--dict", dest="dictionary", help="semantic dictionary TSV")
    p.add_argument("--annotations", help="annotation JSON (recorded in the manifest)")
    p.add_argument("--config", help="key=value config file")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--weights", help="w_ref,w_spat (default 0.7,0.3)")
    p.add_argument("--threshold", type=float, help="classification threshold (default 0.7)")
    p.add_argument("--delta-d", type=float, dest="delta_d", help="density interval width, meters (default 100)")
    p.add_argument("--near-alpha", type=float, help="near buffer constant, meters (default 100)")
    p.add_argument("--near-beta", type=float, help="near buffer relatum-area coefficient (default 1e-3)")
    p.add_argument("--near-gamma", type=float, help="near buffer context-area coefficient (default 5e-5)")
    p.add_argument("--no-promotion", action="store_true", default=None,
                   help="do not promote confident matches to anchors")
    p.add_argument("--jobs", type=int, help="worker threads (default: cpu count); output is identical for any value")
    p.add_argument("--strict", action="store_true", default=None,
                   help="fail on unknown relation labels instead of dropping edges")
    p.add_argument("--projected", action="store_true", default=None,
                   help="gazetteer coordinates are already planar meters")


def _resolve_config(args) -> dict:
    resolved = dict(_DEFAULTS)
    frames: dict[str, float] = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise PlacerefError(f"no such config file: {args.config!r}")
        for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise PlacerefError(f"{args.config}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                if key.startswith("frame."):
                    frames[key[len("frame."):]] = float(value)
                elif key in ("threshold", "delta_d", "near_alpha", "near_beta", "near_gamma"):
                    resolved[key] = float(value)
                elif key == "jobs":
                    resolved[key] = int(value)
                elif key in ("strict", "projected", "promotion"):
                    resolved[key] = value.lower() in ("1", "true", "yes", "on")
                elif key == "weights":
                    resolved[key] = value
                else:
                    raise PlacerefError(f"{args.config}:{lineno}: unknown key {key!r}")
            except ValueError as exc:
                raise PlacerefError(f"{args.config}:{lineno}: bad value for {key!r}: {value!r}") from exc
    for key in ("weights", "threshold", "delta_d", "near_alpha", "near_beta", "near_gamma", "jobs"):
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    if getattr(args, "strict", None):
        resolved["strict"] = True
    if getattr(args, "projected", None):
        resolved["projected"] = True
    if getattr(args, "no_promotion", None):
        resolved["promotion"] = False
    resolved["frames"] = frames
    return resolved


def _pipeline_config(resolved: dict) -> PipelineConfig:
    return PipelineConfig(
        delta_d=resolved["delta_d"],
        near=NearBufferConfig(resolved["near_alpha"], resolved["near_beta"], resolved["near_gamma"]),
        weights=MatchWeights.parse(resolved["weights"]),
        threshold=resolved["threshold"],
        strict=resolved["strict"],
        promotion=resolved["promotion"],
        jobs=resolved["jobs"],
        frames=resolved["frames"],
    )


def _load_inputs(args, resolved):
    for key in ("graph", "gazetteer", "dictionary", "annotations"):
        path = getattr(args, key, None)
        if path and not Path(path).exists():
            raise PlacerefError(f"no such {key} file: {path!r}")
    graph = load_place_graph(Path(args.graph), strict=resolved["strict"])
    gazetteer = load_gazetteer(Path(args.gazetteer), projected=resolved["projected"])
    dictionary = (
        SemanticDictionary.load(args.dictionary) if args.dictionary else SemanticDictionary.default()
    )
    return graph, gazetteer, dictionary


def _cmd_georeference(args) -> int:
    resolved = _resolve_config(args)
    graph, gazetteer, dictionary = _load_inputs(args, resolved)
    cfg = _pipeline_config(resolved)

    run = run_pipeline(graph, gazetteer, cfg, dictionary)
    doc = results_to_geojson(run.results, graph, gazetteer)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out, doc)
    _write_json(Path(str(out) + ".manifest.json"), _manifest(args, resolved))

    if args.dump_alr:
        _dump_alr(Path(args.dump_alr), run, graph, gazetteer)
    if args.dump_kfunction:
        _dump_kfunction(Path(args.dump_kfunction), run)
    if args.dump_clusters:
        _dump_clusters(Path(args.dump_clusters), run, gazetteer)

    if all(r.method == METHOD_UNRESOLVED for r in run.results) and run.results:
        print("no anchor places found; all places unresolved", file=sys.stderr)
        return EXIT_NO_ANCHORS
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    for key in ("results", "annotations", "gazetteer"):
        path = getattr(args, key, None)
        if path and not Path(path).exists():
            raise PlacerefError(f"no such {key} file: {path!r}")
    annotations = load_annotations(Path(args.annotations))
    with open(args.results, encoding="utf-8") as fh:
        records = records_from_geojson(json.load(fh))
    check_coverage(records, annotations)
    gazetteer = None
    if args.gazetteer:
        # loaded verbatim: truth footprints must share the results file's
        # coordinate system (results are written back in the input CRS)
        gazetteer = load_gazetteer(Path(args.gazetteer), projected=True)

    thresholds = _parse_thresholds(args.thresholds)
    anchors = precision_anchors(records, annotations)
    alr_gaz = alr_precision(records, annotations, LABEL_GAZETTEERED, gazetteer)
    alr_non = alr_precision(records, annotations, LABEL_NON_GAZETTEERED, gazetteer)
    curve = precision_by_similarity(records, annotations)
    tradeoff = recall_tradeoff(records, annotations, thresholds)

    metrics = {
        "anchor_precision": _ratio_dict(anchors),
        "alr_precision_gazetteered": _ratio_dict(alr_gaz),
        "alr_precision_non_gazetteered": _ratio_dict(alr_non),
        "precision_by_similarity": [
            {"min_score": s, **_ratio_dict(rat)} for s, rat in curve
        ],
        "recall_tradeoff": [
            {
                "threshold": tau,
                "recall_gazetteered": _ratio_dict(g),
                "recall_non_gazetteered": _ratio_dict(n),
            }
            for tau, g, n in tradeoff
        ],
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out, metrics)

    stem = out.with_suffix("")
    with open(f"{stem}_precision_curve.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["min_score", "precision", "matched"])
        for s, rat in curve:
            writer.writerow([s, rat.value, rat.denominator])
    with open(f"{stem}_recall_tradeoff.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "recall_gazetteered", "recall_non_gazetteered"])
        for tau, g, n in tradeoff:
            writer.writerow([tau, g.value, n.value])
    return EXIT_OK


def _cmd_inspect(args) -> int:
    resolved = _resolve_config(args)
    graph, gazetteer, dictionary = _load_inputs(args, resolved)
    if args.place not in graph.nodes:
        raise UnknownPlaceError(f"unknown place id: {args.place!r}")
    cfg = _pipeline_config(resolved)
    run = run_pipeline(graph, gazetteer, cfg, dictionary)

    result = next(r for r in run.results if r.place_id == args.place)
    line = f"place {result.place_id}: method={result.method}"
    if result.entry_id:
        line += f" entry={result.entry_id}"
    if result.score is not None:
        line += f" score={result.score:.4f}"
    print(line)
    print(f"references: {', '.join(graph.references_of(args.place))}")
    if result.region is not None:
        print(f"constraint region area: {result.region.area:.1f} m^2")
    for event in result.provenance:
        print(f"  - {event}")
    match = run.match_results.get(args.place)
    if match is not None and match.table:
        print("score table (reference / entry / ref_sim / spat_sim / overall):")
        for row in match.table:
            print(
                f"  {row.reference!r} {row.entry_id} "
                f"{row.ref_sim:.4f} {row.spat_sim:.4f} {row.overall:.4f}"
            )
    return EXIT_OK


def _parse_thresholds(spec: str) -> list[float]:
    try:
        start, stop, step = (float(p) for p in spec.split(":"))
    except ValueError as exc:
        raise PlacerefError(f"thresholds must be START:STOP:STEP, got {spec!r}") from exc
    if step <= 0:
        raise PlacerefError("threshold step must be positive")
    out = []
    tau = start
    while tau <= stop + 1e-9:
        out.append(round(tau, 10))
        tau += step
    return out


def _manifest(args, resolved: dict) -> dict:
    inputs = {}
    for key in ("graph", "gazetteer", "dictionary", "annotations", "config"):
        path = getattr(args, key, None)
        if path:
            inputs[key] = {"path": str(path), "sha256": _sha256(Path(path))}
    return {
        "tool": "placeref",
        "version": __version__,
        "inputs": inputs,
        "config": {k: v for k, v in sorted(resolved.items())},
    }


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _ratio_dict(ratio) -> dict:
    return {"value": ratio.value, "numerator": ratio.numerator, "denominator": ratio.denominator}


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _dump_alr(directory: Path, run, graph, gazetteer) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    unproject = gazetteer.projection.inverse if gazetteer.projection else None
    from .pipeline import _geometry_dict  # shared coordinate handling

    for result in run.results:
        if result.region is None:
            continue
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in result.place_id)
        doc = {
            "type": "Feature",
            "geometry": _geometry_dict(result.region.geom, unproject),
            "properties": {"place_id": result.place_id, "area_m2": result.region.area},
        }
        _write_json(directory / f"{safe}.geojson", doc)


def _dump_kfunction(path: Path, run) -> None:
    profile = run.disambiguation.profile if run.disambiguation else None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "K"])
        if profile is not None:
            for d, k in profile.as_pairs():
                writer.writerow([d, k])


def _dump_clusters(path: Path, run, gazetteer) -> None:
    unproject = gazetteer.projection.inverse if gazetteer.projection else None
    features = []
    if run.disambiguation:
        from shapely.geometry import box

        from .pipeline import _geometry_dict

        for cluster in run.disambiguation.clusters:
            ctx = cluster.context
            geom = box(ctx.minx, ctx.miny, ctx.maxx, ctx.maxy)
            features.append(
                {
                    "type": "Feature",
                    "geometry": _geometry_dict(geom, unproject),
                    "properties": {"rank": cluster.rank, "members": len(cluster.members)},
                }
            )
    _write_json(path, {"type": "FeatureCollection", "features": features})


if __name__ == "__main__":
    sys.exit(main())
