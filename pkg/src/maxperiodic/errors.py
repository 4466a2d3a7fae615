"""Exception taxonomy shared by the whole pipeline.

Exit codes used by the CLI map onto these classes: 2 validation,
3 Abel/spinor obstruction, 4 quadrature failure, 5 diagnostics threshold.
"""


class MaxperiodicError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ValidationError(MaxperiodicError):
    """Input data violates a structural constraint (curve, config, divisor)."""

    exit_code = 2


class SpinorObstruction(MaxperiodicError):
    """A divisor fails the Abel/spinor condition beyond tolerance."""

    exit_code = 3

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class QuadratureError(MaxperiodicError):
    """Requested quadrature tolerance could not be reached, or pole on path."""

    exit_code = 4


class DiagnosticsFailure(MaxperiodicError):
    """A surface certificate exceeded its threshold."""

    exit_code = 5
