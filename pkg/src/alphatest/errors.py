"""Exception hierarchy shared by every module."""


class AlphaTestError(Exception):
    """Base class for all package errors."""

    #: module that raised the error, used by the CLI when reporting failures
    module = "alphatest"


class InvalidArgumentError(AlphaTestError, ValueError):
    pass


class DomainError(AlphaTestError, ValueError):
    module = "splinebasis"


class RankDeficiencyError(AlphaTestError):
    module = "splinebasis"


class SingularDesignError(AlphaTestError):
    module = "factor_regression"

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class DegreesOfFreedomError(AlphaTestError):
    module = "factor_regression"


class NoStatisticError(AlphaTestError):
    module = "alpha_tests"


class DegenerateStatisticError(AlphaTestError):
    module = "alpha_tests"


class UnstableVarianceError(AlphaTestError):
    module = "alpha_tests"

    def __init__(self, message, trace_estimate=float("nan")):
        super().__init__(message)
        self.trace_estimate = trace_estimate


class CellFailureError(AlphaTestError):
    """Too many replications of one simulation cell failed."""

    module = "dgp_sim"

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class DataLoadError(AlphaTestError, ValueError):
    module = "data_io"


# errors raised by bad user input map to CLI exit code 2, the rest to 3
INPUT_ERRORS = (InvalidArgumentError, DomainError, DataLoadError, FileNotFoundError)
