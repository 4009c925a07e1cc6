"""Exception hierarchy shared by all modules."""


class CompDofError(Exception):
    """Base class for every error raised by compdof."""


class ArgumentError(CompDofError, ValueError):
    """An argument is outside the operation's domain."""


class NumericalDomainError(CompDofError, ArithmeticError):
    """A rational map or submatrix is undefined at the requested point."""


class NumericalFailure(CompDofError, RuntimeError):
    """An iterative or numerical procedure did not reach its tolerance."""


class ResourceError(CompDofError, RuntimeError):
    """The requested enumeration or matrix exceeds the supported size."""
