"""Exception hierarchy shared by the models and the command line driver."""


class BKSRegError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class ConfigError(BKSRegError):
    """Invalid configuration or command line usage."""

    exit_code = 1


class DomainError(BKSRegError, ValueError):
    """A point or parameter lies outside the domain of an operation."""

    exit_code = 1


class UnsupportedOperatorError(DomainError):
    """Requested observable or frame has no closed-form prequantum operator."""


class NumericError(BKSRegError):
    """A numerical procedure failed to reach its tolerance.

    Args:
        message (str): Human readable description
        diagnostics (dict, optional): Values that explain the failure
    """

    exit_code = 2

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConvergenceError(NumericError):
    """Iteration or limit extrapolation did not converge."""


class QuadratureError(NumericError):
    """Quadrature accuracy check failed."""


class OutputError(BKSRegError):
    """Result files could not be written."""

    exit_code = 3
