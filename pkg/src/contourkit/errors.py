"""Exception types raised across the toolkit."""


class ContourKitError(Exception):
    """Base class for all toolkit errors."""


class InvalidPolygon(ContourKitError, ValueError):
    """Polygon has fewer than 3 vertices, non-finite or malformed coordinates."""


class InvalidGrid(ContourKitError, ValueError):
    """Grid/mask has a bad shape, nonpositive dimensions, or mismatched sizes."""


class InvalidConfig(ContourKitError, ValueError):
    """Unsupported configuration value (point count, window size, channels...)."""


class InvalidInput(ContourKitError, ValueError):
    """Operation input violates a precondition (empty list, length mismatch...)."""


class ParseError(ContourKitError, ValueError):
    """Annotation text could not be parsed. Carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FormatError(ContourKitError, ValueError):
    """Binary file does not conform to its format (bad magic, truncation...)."""


class TooFewCandidates(ContourKitError, ValueError):
    """Not enough contour point candidates to build a polygon."""


class DegenerateGeometry(ContourKitError, ValueError):
    """Point set is degenerate (e.g. all collinear); no 2-D shape exists."""


class NumericalError(ContourKitError, ArithmeticError):
    """A numeric evaluation produced a non-finite value."""


class PlacementError(ContourKitError, RuntimeError):
    """Synthetic scene generation could not place shapes without overlap."""
