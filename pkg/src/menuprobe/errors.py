"""Exception hierarchy.

Every learner failure mode is a distinct subclass so callers (and the CLI's
exit-code contract) can tell a violated precondition from a wrong answer.
"""

from __future__ import annotations


class MenuProbeError(Exception):
    """Base class for all library errors."""


class InfeasibleError(MenuProbeError, ValueError):
    """A strategy or ball menu lies outside the strategy space."""


class GateError(MenuProbeError):
    """A learner was invoked on a game it does not apply to (e.g. wrong dimension)."""


class AssumptionViolation(GateError):
    """The type set breaks an assumption the learner relies on."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateInstanceError(MenuProbeError):
    """No strategy with strictly fixed best responses could be found."""


class AmbiguousMatchError(MenuProbeError):
    """Two candidate types predict the same observation within tolerance."""


class NoMatchError(MenuProbeError):
    """The observed behaviour is inconsistent with every candidate type."""


class IndistinguishableTypesError(MenuProbeError):
    """Surviving types cannot be told apart by any response assignment."""


class SameResponseError(MenuProbeError, ValueError):
    """Bisection endpoints elicit the same action."""


class DegenerateSpreadError(MenuProbeError, ValueError):
    """Hyperplane points do not determine the unknown scale and intercept."""


class NonPositiveScaleError(MenuProbeError, ValueError):
    """A solved gradient scale came out non-positive."""


class ShrinkExhaustedError(MenuProbeError):
    """Ball-radius shrinking never produced the oracle's promised action."""
