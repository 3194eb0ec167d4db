"""Exception types shared across the package.

The CLI maps these onto its exit codes, so keep the hierarchy flat.
"""


class XXChainError(Exception):
    """Base class for all package errors."""


class PreconditionError(XXChainError, ValueError):
    """Input violates a documented precondition (bad M, wrong sector, ...)."""


class ResourceLimitError(XXChainError):
    """Requested dense object exceeds the configured dimension cap."""


class ExceptionalPointError(XXChainError):
    """Parameters sit on (or past) an exceptional point of the chain."""


class JordanBlockSuspected(ExceptionalPointError):
    """The metric lost positivity; carries the offending eigenvalue."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class CrossValidationError(XXChainError):
    """Two independent routes disagree beyond tolerance."""

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst


class ConstructionError(XXChainError):
    """An internal consistency check failed while building an object."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
