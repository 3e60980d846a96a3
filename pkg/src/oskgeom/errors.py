"""Exception types shared across the package."""


class OskgeomError(Exception):
    """Base class for all library errors."""


class GeometryError(OskgeomError):
    """Base class for geometric validation failures."""


class DegenerateQuadError(GeometryError):
    """Quad area below the degeneracy floor (or a collapsed edge)."""


class SelfIntersectingError(GeometryError):
    """Quad perimeter crosses itself (bow-tie input)."""


class NonConvexInputError(GeometryError):
    """Operation requires convex quads; caller may fall back to iou_pixel."""


class EmptyUnionError(GeometryError):
    """Both quads rasterize to zero pixels at the requested resolution."""


class ShapeMismatchError(OskgeomError):
    """Array arguments disagree on shape."""


class EmptyHistogramError(OskgeomError):
    """Histogram has no samples."""


class InvalidHeatmapError(OskgeomError):
    """Heatmap values out of range or file contents malformed."""


class ParseError(OskgeomError):
    """Malformed text input. Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
