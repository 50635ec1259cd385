"""Exception hierarchy.

Errors are split into data problems and estimator problems so the command
line can map them onto distinct exit codes.
"""


class TwoJackError(Exception):
    """Base class for every error raised by this package."""


class DataError(TwoJackError, ValueError):
    """Problem with the observations themselves."""


class EstimatorError(TwoJackError, ValueError):
    """A weight rule or statistic cannot be evaluated on the given data."""


class EmptySample(DataError):
    pass


class TooFewObservations(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class UnknownDataset(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SummaryOnlyDataset(DataError):
    """The dataset exists only as published summary statistics."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingSample(DataError):
    pass


class InvalidModel(DataError):
    pass


class UnbalancedDesign(EstimatorError):
    pass


class BothVariancesZero(EstimatorError):
    pass


class NonPositiveVariance(EstimatorError):
    pass


class ZeroDenominator(EstimatorError):
    pass


class InvalidD(EstimatorError):
    pass


class OutOfDomain(EstimatorError):
    pass


class StatisticEvaluationError(EstimatorError):
    """A statistic failed on a resampled or reduced data set.

    ``index`` identifies the leave-out position or replicate that failed.
    """

    def __init__(self, message, index=None):
        self.index = index
        if index is not None:
            message = f"{message} (at index {index})"
        super().__init__(message)
