"""Geo-referencing engine for place graphs.

Assigns a geographic footprint to every place node extracted from natural
language place descriptions: exact gazetteer matches are disambiguated by
density clustering, the rest are matched inside spatial-relationship
constraint regions, and places absent from the gazetteer keep their derived
constraint region as the geo-reference.
"""

__version__ = "0.1.0"

from .errors import PlacerefError
from .gazetteer import Gazetteer, GazetteerEntry, load_gazetteer
from .graph import PlaceGraph, RelationKind, load_place_graph, normalize_relation
from .matching import MatchWeights, SemanticDictionary
from .pipeline import GeoreferenceResult, PipelineConfig, georeference, run_pipeline

__all__ = [
    "Gazetteer",
    "GazetteerEntry",
    "GeoreferenceResult",
    "MatchWeights",
    "PipelineConfig",
    "PlaceGraph",
    "PlacerefError",
    "RelationKind",
    "SemanticDictionary",
    "__version__",
    "georeference",
    "load_gazetteer",
    "load_place_graph",
    "normalize_relation",
    "run_pipeline",
]
