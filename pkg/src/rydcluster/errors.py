"""Exception types shared across the package.

The command-line front end maps these onto exit codes, so library code
raises them instead of bare ``ValueError``.
"""


class ParameterError(ValueError):
    """An input parameter is outside the accepted range."""


class ContractError(ValueError):
    """An input violates a structural precondition (shape, symmetry)."""


class DomainError(ArithmeticError):
    """A computation left its mathematical domain or produced non-finite values."""
