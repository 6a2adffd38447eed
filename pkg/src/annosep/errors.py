"""Exception types shared across the toolkit."""


class AnnosepError(Exception):
    """Base class for all toolkit errors."""


class InputError(AnnosepError):
    """Raised when an input signal, matrix, or file is malformed."""


class ConfigError(AnnosepError):
    """Raised when a solver or experiment configuration is invalid."""


class NumericalError(AnnosepError):
    """Raised when a numerical routine (SVD, solve) fails to produce a result."""
