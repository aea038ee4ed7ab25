class ConfoundingIntervalError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ConfoundingIntervalError, ValueError):
    """An argument lies outside its mathematical domain."""


class EmptyFeasibleSetError(ConfoundingIntervalError):
    """No sensitivity tuple satisfies the bounds and the realizability band."""


class RankDeficiencyError(ConfoundingIntervalError):
    """A least-squares design matrix is not of full column rank."""


class DegenerateVarianceError(ConfoundingIntervalError):
    """x or y has zero variance."""


class InfeasibleTupleError(ConfoundingIntervalError):
    """A sensitivity tuple cannot be realized by any dataset."""


class PriorIncompatibleError(ConfoundingIntervalError):
    """A prior puts (almost) no mass on the feasible set."""


class ConfigError(ConfoundingIntervalError):
    """A configuration file is unreadable or malformed."""


class DataParseError(ConfoundingIntervalError):
    """A CSV cell could not be parsed."""

    def __init__(self, message: str, line: int = None, column: str = None):
        super().__init__(message)
        self.line = line
        self.column = column
