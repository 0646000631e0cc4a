"""Exception hierarchy shared by all qedcc modules."""


class QedccError(Exception):
    """Base class for every error raised by qedcc."""

    kind = "error"


class StructuralError(QedccError):
    """Inconsistent shapes, indices or occupations."""

    kind = "structural"


class ModelFormatError(QedccError):
    """A model, fixture or grid file does not follow its schema."""

    kind = "input"


class ConfigurationError(QedccError):
    """Requested channel, option or mode cannot be honoured."""

    kind = "configuration"


class CapacityError(QedccError):
    """A brute-force space exceeds the configured determinant cap."""

    kind = "capacity"


class DomainError(QedccError):
    """Arguments outside the validity range of a closed-form expression."""

    kind = "domain"


class NumericalError(QedccError):
    """Numerical breakdown (non-Hermitian input, defective matrix, ...)."""

    kind = "numerical"


class DegenerateDenominatorError(NumericalError):
    kind = "degenerate-denominator"


class ContractError(NumericalError):
    kind = "contract"


class DivergenceError(NumericalError):
    """Iterative solver hit its iteration limit.

    The residual history is kept so callers can inspect how it stalled.
    """

    kind = "divergence"

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)
