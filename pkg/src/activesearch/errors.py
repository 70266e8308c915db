"""Exception hierarchy shared by every module."""


class ActiveSearchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(ActiveSearchError, ValueError):
    """Parameters are outside the domain an operation accepts."""


class InputError(ActiveSearchError, ValueError):
    """Input data is malformed (non-finite features, bad labels, ...)."""


class ParseError(InputError):
    """A data file could not be parsed.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UsageError(ActiveSearchError, RuntimeError):
    """An operation was called on a state that violates its precondition."""


class DomainExhausted(ActiveSearchError, LookupError):
    """There are no unlabeled points left to choose from."""


class InfeasibleMoments(ActiveSearchError, ValueError):
    """No beta distribution has the requested mean and variance."""


class DegenerateMoments(InfeasibleMoments):
    """The requested variance is zero or negative."""


class NoCrossoverFound(ActiveSearchError, ArithmeticError):
    """A crossover search could not certify a solution."""
