"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented exit statuses without a lookup table:
2 for configuration problems, 3 for data / I/O problems and 4 for numerical
failures.
"""


class DesmoothError(Exception):
    exit_code = 4


class ConfigError(DesmoothError, ValueError):
    exit_code = 2


class DataError(DesmoothError, ValueError):
    exit_code = 3


class NumericalError(DesmoothError, ArithmeticError):
    exit_code = 4


class InvalidBandwidthError(ConfigError):
    pass


class UnsupportedMomentError(ConfigError):
    pass


class MissingDerivativeError(ConfigError):
    def __init__(self, name, order):
        super().__init__(f"derivative of order {order} of {name!r} is not available")
        self.name = name
        self.order = order


class EmptyDatasetError(DataError):
    pass


class DataFormatError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateDesignError(DataError):
    pass


class NonPositiveResponseError(DataError):
    pass


class RankDeficiencyError(NumericalError):
    def __init__(self, x0):
        super().__init__(f"weighted design matrix is numerically singular at x0={x0!r}")
        self.x0 = x0


class OptimizerFailureError(NumericalError):
    def __init__(self, x0, message="no bracketing triple found"):
        super().__init__(f"{message} at x0={x0!r}")
        self.x0 = x0


class UndefinedOptimumError(NumericalError):
    pass


class NoValidBandwidthError(NumericalError):
    pass


class UndefinedMADError(NumericalError):
    pass
