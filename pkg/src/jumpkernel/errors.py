"""Shared exception types.

The CLI maps these onto exit codes: validation problems (bad specs, points
outside the admissible region) are :class:`ValidationError`, numeric
failures that still carry a best-effort estimate are
:class:`NonConvergenceError`.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """A spec, config or evaluation point violates a documented precondition."""


class DomainError(ValidationError):
    """An evaluation point lies outside the region where the operation is defined."""


class NonConvergenceError(RuntimeError):
    """Adaptive refinement hit its depth cap before meeting the tolerance.

    Carries the last value and error estimate so callers can still inspect
    (and persist) the partial result.
    """

    def __init__(self, message: str, value: float, err_estimate: float):
        super().__init__(message)
        self.value = value
        self.err_estimate = err_estimate
