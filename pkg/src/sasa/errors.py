class InsufficientSamples(ValueError):
    """Raised when a statistic needs more samples than are available."""


class NumericalError(ArithmeticError):
    """Raised when an optimizer state or gradient stops being finite."""
