"""Exception types raised across the package."""


class PlacerefError(Exception):
    """Base class for all errors raised by this package."""


class GraphFormatError(PlacerefError):
    """The place-graph document is malformed or violates an invariant."""


class UnknownRelationError(PlacerefError):
    """A relation surface string has no entry in the synonym table."""

    def __init__(self, surface: str):
        super().__init__(f"unknown spatial relation: {surface!r}")
        self.surface = surface


class UnknownPlaceError(PlacerefError):
    """A place id is not present in the graph."""


class GazetteerFormatError(PlacerefError):
    """The gazetteer document is malformed."""


class GeometryError(PlacerefError):
    """A footprint geometry is invalid (open/self-intersecting ring, zero area)."""


class NoSearchSpaceError(PlacerefError):
    """No search space can be defined (topological relation, non-polygon relatum)."""


class NoClusterSignal(PlacerefError):
    """No distance satisfies the density-threshold rule for cluster derivation."""


class UnconstrainedError(PlacerefError):
    """A place has no relationships to any geo-referenced anchor."""


class NoCandidatesError(PlacerefError):
    """No gazetteer entries intersect the derived constraint region."""


class AnnotationError(PlacerefError):
    """Annotations are missing or inconsistent with the results under evaluation."""
