"""Exception types shared across the package."""


class RandersError(Exception):
    """Base class for all package errors."""


class DomainError(RandersError):
    """A point or curve left the closed computational domain."""


class InvalidNormError(RandersError):
    """A Randers spec violates the norm axioms (one-form too large, etc.)."""


class DegenerateInputError(RandersError):
    """An operation that is undefined at y = 0 received a zero vector."""


class ConvexityError(RandersError):
    """The fundamental tensor is singular or indefinite where it must not be."""


class InvalidMediumError(RandersError):
    """A moving-medium model has drift speed >= wave speed somewhere."""


class TrappedGeodesicError(RandersError):
    """A geodesic failed to reach the boundary within the step/time budget."""


class ConnectivityError(RandersError):
    """No shooting branch connects the requested boundary points."""


class NonAdmissibleError(RandersError):
    """More than one geodesic branch connects a boundary pair."""


class SpecMismatchError(RandersError):
    """A path was produced under a different norm than the one supplied."""


class TriplicationError(RandersError):
    """Ray parameter is not monotone in separation; profile inversion invalid."""


class RecoveryError(RandersError):
    """A recovery pipeline stage received inconsistent or incomplete data."""


class ConfigError(RandersError):
    """Scenario configuration is malformed.

    Carries optional 1-based line/column info pointing at the offending text.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if column is not None:
            parts.append(f"column {column}")
        if parts:
            message = f"{', '.join(parts)}: {message}"
        super().__init__(message)


class CsvFormatError(RandersError):
    """A CSV artifact is malformed; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
