"""Exception types shared across the package, mapped to CLI exit codes."""


class QubitnetError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(QubitnetError):
    """Invalid configuration, graph input, or command-line usage (exit code 2)."""


class BudgetExceededError(QubitnetError):
    """A planner run was refused because its estimated operation count
    exceeds the configured budget (exit code 3)."""

    def __init__(self, estimated_ops: int, budget: int):
        self.estimated_ops = estimated_ops
        self.budget = budget
        super().__init__(
            f"estimated operation count {estimated_ops} exceeds budget {budget}"
        )


class NumericalError(QubitnetError):
    """An iterative numerical routine failed to converge (exit code 4)."""
