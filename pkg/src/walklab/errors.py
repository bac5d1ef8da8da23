"""Typed exceptions raised across the package.

Every error that carries diagnostic payload (witness point, residual, table)
stores it as an attribute so callers and the CLI can render it without
parsing the message string.
"""

from __future__ import annotations


class WalkLabError(Exception):
    """Base class for all package errors."""


class InvalidStepSetError(WalkLabError):
    """Step set is empty, malformed, or admits no centered elliptic weighting."""


class InvalidKernelError(WalkLabError):
    """A transition-kernel condition fails somewhere; carries the witness."""

    def __init__(self, message, point=None, condition=None, magnitude=None):
        super().__init__(message)
        self.point = point
        self.condition = condition
        self.magnitude = magnitude


class InvalidProfileError(WalkLabError):
    """Boundary profile violates its normalization or Lipschitz bound."""


class InvalidRegionError(WalkLabError):
    """Region radii are out of range (negative, or R < r for a collar)."""


class OutsideDomainError(WalkLabError):
    """A point required to lie in the domain does not."""


class InvalidAnchorError(WalkLabError):
    """The anchor point y + R*e1 falls outside the domain or window."""


class InvalidTargetError(WalkLabError):
    """Harmonic-measure target is not a subset of the problem boundary."""


class InvalidSourceError(WalkLabError):
    """Green-function source point is not in the interior set."""


class MissingFieldValueError(WalkLabError):
    """Field lookup at a point outside its support; carries the point."""

    def __init__(self, point):
        super().__init__(f"field has no value at point {tuple(point)}")
        self.point = point


class ConvergenceFailureError(WalkLabError):
    """Linear solve failed its residual contract; carries the residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonConvergenceError(WalkLabError):
    """Exhaustion deviations stopped decreasing; carries the deviation log."""

    def __init__(self, message, deviations=None):
        super().__init__(message)
        self.deviations = deviations


class DegenerateCandidateError(WalkLabError):
    """A harmonic candidate is not strictly positive on the comparison window."""


class DegenerateGeometryError(WalkLabError):
    """A region needed by an experiment is empty (e.g. collar with no top)."""


class OnsetNotFoundError(WalkLabError):
    """No scale in the grid reached exit-ratio >= 1; carries the full table."""

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table


class InsufficientDataError(WalkLabError):
    """An envelope fit has too few distinct distance levels."""


class InconclusiveSimulationError(WalkLabError):
    """Every simulated path hit the step cap before exiting."""


class UnreachableReferenceError(WalkLabError):
    """Martin normalization failed: Green value at the reference point is zero."""


class ConfigError(WalkLabError):
    """Configuration file is malformed; message names the offending field."""
