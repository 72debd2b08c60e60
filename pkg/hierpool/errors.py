"""
Exceptions raised across the package.

Every exception derives from HierpoolError so the command line front end can
map them onto exit codes in one place.
"""


class HierpoolError(Exception):
    """Base class for every error raised by hierpool"""


class DomainError(HierpoolError, ValueError):
    """Argument outside the support of a density or the domain of a transform"""


class ShapeError(HierpoolError, ValueError):
    """Vector or matrix dimensions are inconsistent"""


class DataError(HierpoolError, ValueError):
    """Dataset content is inconsistent with the model (e.g. site index out of range)"""


class ConfigurationError(HierpoolError, ValueError):
    """Invalid sampler or prior configuration"""


class UsageError(HierpoolError):
    """Invalid command line usage (unknown scenario token, bad flag value)"""


class EvaluationError(HierpoolError, ArithmeticError):
    """A log-density or its gradient is not finite

    Attributes:
        coordinate (int, optional): first unconstrained coordinate with a non-finite derivative
    """

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class ValidationError(HierpoolError):
    """Input file failed validation

    Attributes:
        line (int, optional): 1-based line number in the offending file (header is line 1)
        column (str, optional): offending column name
    """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class AdaptationError(HierpoolError):
    """Warmup adaptation could not find a usable step size"""


class SamplingError(HierpoolError):
    """A chain failed while sampling

    Attributes:
        chain (int): index of the failing chain
    """

    def __init__(self, message, chain=None):
        if chain is not None:
            message = f"chain {chain}: {message}"
        super().__init__(message)
        self.chain = chain
