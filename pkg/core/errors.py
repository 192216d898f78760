"""Exception hierarchy for the positioning toolkit."""


class PositioningError(Exception):
    """Base exception for positioning-related errors."""


class ConfigurationError(PositioningError):
    """Raised when a configuration is invalid or cannot be loaded."""


class GeometryError(PositioningError):
    """Base exception for geometry problems."""


class DegenerateHullError(GeometryError):
    """Raised when gNB projections cannot span a 2D convex hull."""


class SingularGeometryError(GeometryError):
    """Raised when a candidate position coincides with a transmitter."""


class InsufficientGeometryError(GeometryError):
    """Raised when too few usable links remain to fix a 3D position."""


class IllConditionedGeometryError(GeometryError):
    """Raised when the normal-equation matrix is singular or ill-conditioned."""


class MeasurementError(PositioningError):
    """Raised when a measurement set is malformed."""


class StatisticsError(PositioningError):
    """Raised when a statistic cannot be computed from the samples."""


class ExportError(PositioningError):
    """Raised when campaign results cannot be written."""


class NoSolvableUEsError(PositioningError):
    """Raised when a campaign produced no converged in-hull UE."""
