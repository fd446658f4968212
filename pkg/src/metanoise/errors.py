"""Exception hierarchy shared by all modules."""


class MetanoiseError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(MetanoiseError, ValueError):
    """Operands act on different numbers of qubits."""


class ShapeError(MetanoiseError, ValueError):
    """An array does not have the expected shape (e.g. not 2^n x 2^n)."""


class DomainError(MetanoiseError, ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceLimitError(MetanoiseError):
    """The requested instance exceeds a configured size limit."""


class ExceptionalPointError(MetanoiseError):
    """A superoperator is (numerically) non-diagonalizable."""


class UnsupportedBasisError(MetanoiseError):
    """The noise channel is not diagonal in the Pauli basis."""


class PreconditionError(MetanoiseError, ValueError):
    """An input violates a documented precondition (e.g. non-stabilizer state)."""


class StepSizeError(MetanoiseError):
    """Fixed-step integration became unstable; retry with a smaller step."""


class InvariantViolation(MetanoiseError):
    """A physical invariant (trace, hermiticity, ...) was violated during a run."""


class ConfigError(MetanoiseError, ValueError):
    """A configuration or input file could not be parsed or validated."""
