"""Exception hierarchy shared across the package."""


class QuadbenchError(Exception):
    """Base class for all package errors."""


class ConfigError(QuadbenchError, ValueError):
    """Invalid parameters or configuration."""


class InputError(QuadbenchError, ValueError):
    """Rejected input data (e.g. non-finite coordinates)."""


class ContractError(QuadbenchError, ValueError):
    """A precondition of an operation was violated by the caller."""


class ParseError(QuadbenchError, ValueError):
    """Malformed point-cloud file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoObstaclesError(QuadbenchError):
    """Operation requires at least one occupied cell."""


class UndefinedMetricError(QuadbenchError):
    """A complexity index is undefined for the given grid."""


class PlanningError(QuadbenchError):
    """Base class for front-end failures."""

    status = "infeasible"


class InfeasibleError(PlanningError):
    """No path exists (search space exhausted)."""

    status = "infeasible"


class BudgetExceededError(PlanningError):
    """The planner ran out of time or work budget."""

    status = "timeout"


class SamplingError(QuadbenchError):
    """Start/goal rejection sampling exhausted its attempt budget."""


class OptimizationFailure(QuadbenchError):
    """Back-end could not produce a constraint-satisfying trajectory."""

    status = "opt-failure"
