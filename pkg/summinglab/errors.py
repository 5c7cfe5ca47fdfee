"""Exception hierarchy shared by every summinglab module.

`InputError` subclasses signal bad arguments or files (CLI exit code 2);
`NumericalError` subclasses signal solver or validation failures (exit code 4).
Neither derives from ValueError, so pydantic validators let them through
unwrapped.
"""

from __future__ import annotations

from typing import Any

__all__ = [
    'SummingLabError',
    'InputError',
    'DimensionMismatchError',
    'BudgetTooSmallError',
    'NotGammaPairError',
    'ExponentIdentityError',
    'HypothesisViolationError',
    'NumericalError',
    'InfeasibleError',
    'UnboundedError',
    'CertificateValidationError',
]


class SummingLabError(Exception):
    """Base class of all summinglab errors."""


class InputError(SummingLabError):
    """Raised when arguments or input files are invalid."""


class DimensionMismatchError(InputError):
    """Raised when a vector or matrix does not fit the declared space."""


class BudgetTooSmallError(InputError):
    """Raised when a sampling or grid budget is below the allowed minimum."""


class NotGammaPairError(InputError):
    """Raised when (q0, q1) fails 1/q0 = 1/q1 + 1/p*."""


class ExponentIdentityError(InputError):
    """Raised when an exponent scheme violates its defining identity."""


class HypothesisViolationError(InputError):
    """Raised when an abstract problem breaks the phi-independence hypothesis."""


class NumericalError(SummingLabError):
    """Raised when a numerical routine cannot produce a trustworthy answer."""

    def __init__(self, message: str, witness: Any | None = None):
        super().__init__(message)
        self.witness = witness


class InfeasibleError(NumericalError):
    """Raised when a domination LP has no feasible measure."""


class UnboundedError(NumericalError):
    """Raised when a linear program is unbounded below."""


class CertificateValidationError(NumericalError):
    """Raised when every atom annihilates a functional the operator does not."""
