"""Exception hierarchy shared by all derand modules."""


class DerandError(Exception):
    """Base class for all library errors."""


class ParameterError(DerandError, ValueError):
    """Invalid parameters (violated preconditions, bad ranges)."""


class UnsupportedFieldError(ParameterError):
    """Requested finite field outside the supported table."""


class DimensionMismatch(ParameterError):
    """Word lengths or alphabet sizes do not line up."""


class BudgetError(DerandError):
    """An enumeration or constraint count exceeds the configured budget.

    Budgets default to 2**24 objects and can be raised via the
    DERAND_BUDGET environment variable.
    """


class InfeasibleError(DerandError):
    """The requested sample size m does not satisfy the feasibility
    condition sum_i exp(-D_i * m) <= 1."""


class PrecisionError(DerandError):
    """Interval arithmetic could not certify a decision at the maximum
    configured precision."""


class ContractError(DerandError):
    """A user-supplied callback violated its contract (e.g. a conditional
    mean that is not a martingale, or a full prefix that does not
    determine a constraint)."""


class ParseError(DerandError, ValueError):
    """Malformed sample-set file."""
