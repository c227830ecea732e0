"""Shared exception types."""


class ConfigurationError(ValueError):
    """Invalid parameters, bounds, or precondition violations."""


class BudgetExhausted(RuntimeError):
    """Raised when a fitness evaluation is requested past the budget.

    Drivers treat this as a stop condition, never as a failure.
    """
