"""Exception types shared across the package."""


class ChoicedynError(Exception):
    """Base class for all library errors."""


class DomainError(ChoicedynError, ValueError):
    """An argument violates a mathematical precondition (sign, range, shape)."""


class DegenerateMarketError(DomainError):
    """Every share is zero (or every product was removed); no choice remains."""


class ConfigError(ChoicedynError, ValueError):
    """A scenario file or scenario object violates its invariants."""


class ConvergenceError(ChoicedynError, RuntimeError):
    """An iterative solver exhausted its budget; carries the final residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class IntegrationError(ChoicedynError, RuntimeError):
    """The state became non-finite during time integration."""

    def __init__(self, message: str, last_valid_time: float):
        super().__init__(f"{message} (last valid time t={last_valid_time:g})")
        self.last_valid_time = last_valid_time
