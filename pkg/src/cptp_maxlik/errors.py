"""Exception hierarchy shared across the package."""


class CptpMaxlikError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CptpMaxlikError, ValueError):
    """Shapes, dimensions or values that violate an operation's contract."""


class DomainError(CptpMaxlikError, ValueError):
    """Input lies outside the mathematical domain (e.g. materially non-PSD)."""


class NumericalFailureError(CptpMaxlikError, ArithmeticError):
    """An iterative numerical routine failed to converge."""


class NotInformationallyCompleteError(CptpMaxlikError, ValueError):
    """The tomography design does not span the Choi operator space."""


class DegenerateFactorError(CptpMaxlikError, ValueError):
    """A Cholesky-type factor produced the zero operator."""


class InvalidStartError(CptpMaxlikError, ValueError):
    """An optimizer objective was not finite at the starting point."""


class NotApplicableError(CptpMaxlikError, ValueError):
    """A diagnostic was requested for a result that lacks the needed data."""
