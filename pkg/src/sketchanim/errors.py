"""Exception types shared across the package."""


class SketchAnimError(Exception):
    """Base class for all sketchanim errors."""


class ShapeMismatch(SketchAnimError):
    """Array or structure shapes are inconsistent with each other."""


class TooFewPoints(SketchAnimError):
    """Triangulation needs at least three distinct points."""


class AllCollinear(SketchAnimError):
    """Triangulation input points are all collinear."""


class EmptyMesh(SketchAnimError):
    """Mesh has no valid triangles."""


class MalformedSvg(SketchAnimError):
    """SVG document or path data could not be parsed."""


class UnsupportedCommand(SketchAnimError):
    """SVG path command outside the supported M/L/C/Z subset."""


class EmptySketch(SketchAnimError):
    """SVG document contains no drawable path data."""


class NonFiniteLoss(SketchAnimError):
    """Training loss became NaN or infinite."""

    def __init__(self, iteration: int, value: float):
        super().__init__(f"non-finite loss {value!r} at iteration {iteration}")
        self.iteration = iteration
        self.value = value


class ConfigError(SketchAnimError):
    """Run configuration failed validation."""
