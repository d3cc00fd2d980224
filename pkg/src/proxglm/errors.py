"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid setup: malformed regularizer, schedule, or input file."""


class NumericalError(RuntimeError):
    """A solver failed to meet its guaranteed tolerance or certificate."""
