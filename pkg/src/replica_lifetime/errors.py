"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class LifetimeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(LifetimeError, ValueError):
    """A model parameter is out of range.

    ``field`` names the offending parameter so callers (and the CLI) can
    report it without parsing the message.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NonPositiveLambda(InvalidParams):
    pass


class NegativeRate(InvalidParams):
    pass


class ZeroD(InvalidParams):
    pass


class DTooLarge(InvalidParams):
    pass


class NonFiniteInput(InvalidParams):
    pass


class DimensionMismatch(LifetimeError, ValueError):
    pass


class Singular(LifetimeError, ArithmeticError):
    """A linear system has a (numerically) zero pivot."""


class SingularSystem(Singular):
    pass


class SingularSubgenerator(Singular):
    pass


class SingularU(Singular):
    pass


class TruncationTooSmall(LifetimeError, ValueError):
    pass


class NoConvergence(LifetimeError, RuntimeError):
    pass


class InvalidInitialState(LifetimeError, ValueError):
    pass
