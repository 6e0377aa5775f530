"""Exception hierarchy. Each class maps to a CLI exit code."""


class TextureKitError(Exception):
    exit_code = 1


class ParameterError(TextureKitError, ValueError):
    """A configuration value is outside its allowed range."""

    exit_code = 2


class DataValidationError(TextureKitError, ValueError):
    """Input data or a persisted artifact violates its invariants."""

    exit_code = 4


class NumericalError(TextureKitError, ArithmeticError):
    """A computation produced a degenerate or non-finite result."""

    exit_code = 5
