"""Exception hierarchy.

Errors split into two families so the command line can map them onto
exit codes: user/configuration problems (1) and numerical failures (2).
"""


class IllumoptError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(IllumoptError, ValueError):
    """Invalid optical, reconstruction or learning configuration."""


class SchemaError(IllumoptError, ValueError):
    """A file on disk does not match its expected schema."""


class ConstraintViolationError(IllumoptError, ValueError):
    """A design matrix violates non-negativity, scale or geometric constraints."""


class StaleTapeError(IllumoptError, ValueError):
    """Backward pass requested with a tape recorded for a different design."""


class NumericalError(IllumoptError, ArithmeticError):
    exit_code = 2


class DivergenceError(NumericalError):
    """Non-finite values appeared inside the unrolled solver."""

    def __init__(self, layer, message=None):
        self.layer = layer
        super().__init__(
            message
            or f"non-finite values at reconstruction layer {layer}; step size alpha is likely too large"
        )


class DegenerateDesignError(NumericalError):
    """A design column has no admissible positive weight left."""


class DegenerateMeasurementError(NumericalError):
    """An intensity image cannot be flattened (mean <= 0)."""
