"""Exceptions shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class GradientSingularityError(RuntimeError):
    """The implicit-function denominator vanished; the analytic gradient is undefined."""


class ConfigError(ValueError):
    """An experiment configuration failed to parse or validate."""
