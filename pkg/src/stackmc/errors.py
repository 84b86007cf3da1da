"""Exception hierarchy shared by every stackmc module."""


class StackMCError(Exception):
    """Base class for all errors raised by stackmc."""


class ParameterError(StackMCError, ValueError):
    pass


class ShapeError(StackMCError, ValueError):
    pass


class InsufficientDataError(StackMCError, ValueError):
    pass


class UnsupportedIntegralError(StackMCError):
    """No closed form for E[basis] under this marginal; use a Monte Carlo expectation."""


class DegenerateWeightError(StackMCError, ValueError):
    pass


class NumericError(StackMCError, ArithmeticError):
    pass


class ParseError(StackMCError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(StackMCError, ValueError):
    pass


class NotAvailableError(StackMCError, LookupError):
    pass
