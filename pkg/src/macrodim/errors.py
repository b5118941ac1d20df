"""Exception hierarchy shared by all modules."""


class MacrodimError(Exception):
    """Base class for package errors."""


class InputError(MacrodimError, ValueError):
    """Invalid argument or malformed input data."""


class ResourceError(MacrodimError):
    """Request refused because it would exceed a memory or time budget."""

    def __init__(self, message: str, required: float | None = None, budget: float | None = None):
        if required is not None and budget is not None:
            message = f"{message} (required {required:.3g}, budget {budget:.3g})"
        super().__init__(message)
        self.required = required
        self.budget = budget


class InsufficientDataError(MacrodimError):
    """Too few occupied shells or points for a regression."""


class StabilityError(MacrodimError, ValueError):
    """Time step violates the explicit-scheme stability bound."""


class IntegrityError(MacrodimError):
    """An output file does not match the digest recorded in its manifest."""


class ConfigError(InputError):
    """Configuration file failed validation."""
