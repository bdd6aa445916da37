"""Exception types shared across the package.

Two broad families matter to callers: :class:`ValidationError` for bad
inputs, configurations or files (the CLI exits with code 2), and
:class:`SolverError` for numerical routines that could not reach their
target (exit code 3).
"""


class PgaKitError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PgaKitError):
    """Invalid input data, configuration, or file contents."""


class SolverError(PgaKitError):
    """An iterative numerical routine failed to reach its target."""


class NonConvergenceError(SolverError):
    """Iteration budget exhausted before the requested tolerance."""


class NotPositiveDefiniteError(ValidationError):
    """A matrix expected to be positive definite has an eigenvalue <= 0."""


class CutLocusError(SolverError):
    """Log map requested at or beyond the cut locus of the base point."""


class BaseMismatchError(ValidationError):
    """Tangent vectors anchored at different base points were combined."""


class OutOfInjectivityRadiusError(ValidationError):
    """Tangent vector too long for the exponential map to be injective."""


class UnsupportedManifoldError(ValidationError):
    """Operation not defined for this manifold kind."""


class DegeneratePlaneError(ValidationError):
    """Sectional curvature of a (nearly) degenerate 2-plane requested."""


class DegenerateSpectrumError(SolverError):
    """Eigenvalue gaps too small for a spectrum-dependent computation."""


class LogDomainError(SolverError):
    """Matrix logarithm requested outside its principal domain."""


class SeriesExtractionUnstableError(SolverError):
    """Richardson estimates from different scale ladders disagree."""


class UnsupportedOrderError(ValidationError):
    """Closed-form series coefficient not available at this order."""


class InsufficientGridError(ValidationError):
    """Scale grid too short for the requested fit."""


class SchemaError(ValidationError):
    """Dataset file violates the documented schema."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{message} (field: {field})")
        self.field = field
