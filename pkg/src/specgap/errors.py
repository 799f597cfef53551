"""Exception hierarchy shared by every module."""


class SpecgapError(Exception):
    """Base class for all package errors."""


class SpecError(SpecgapError, ValueError):
    """An operator, symbol or family description violates its invariants."""


class DomainError(SpecgapError, ValueError):
    """A parameter lies outside the declared family domain."""


class ContractError(SpecgapError, ValueError):
    """An input breaks an operation's precondition (shape, symmetry, weights)."""


class PreconditionError(ContractError):
    """A numerical precondition failed, e.g. a claimed gap meets the spectrum."""


class NumericalError(SpecgapError, ArithmeticError):
    """An iteration did not converge."""


class InsufficientDataError(SpecgapError):
    """Too few samples to form the requested limit estimate."""


class ConfigError(SpecgapError):
    """Malformed configuration; ``path`` names the offending key."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)
