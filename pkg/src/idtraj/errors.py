"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`IdtrajError`
so callers (the backtest loop, the CLI) can isolate failures per cell.
"""


class IdtrajError(Exception):
    """Base class."""


class InputError(IdtrajError, ValueError):
    """Malformed caller input (e.g. non-positive trade volume)."""


class DataError(IdtrajError):
    """Missing or inconsistent data (e.g. no day-ahead price for a fallback)."""


class ConfigError(IdtrajError, ValueError):
    """Invalid configuration."""


class DomainError(IdtrajError, ValueError):
    """Argument outside the mathematical domain of a function."""


class PreconditionError(IdtrajError, ValueError):
    """A documented precondition does not hold (e.g. missing lag history)."""


class ContractError(IdtrajError):
    """Interface contract violated (e.g. feature-name mismatch)."""


class EstimationError(IdtrajError):
    """A fit cannot be carried out on the given data."""


class ConvergenceError(EstimationError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NumericError(IdtrajError, ArithmeticError):
    """Numerical breakdown that could not be repaired."""
