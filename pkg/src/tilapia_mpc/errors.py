"""Exception types raised across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of a model or cost function."""


class IntegrationError(ArithmeticError):
    """The ODE integrator produced a non-finite state."""


class SolverError(RuntimeError):
    """The optimal control problem could not be solved."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class MetricError(ValueError):
    """A performance metric is undefined for the given run."""


class ConfigError(ValueError):
    """Invalid configuration or input file."""
