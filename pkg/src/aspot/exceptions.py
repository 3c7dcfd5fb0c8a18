"""Exception and warning classes raised by the solvers and pipelines."""

from __future__ import annotations

from dataclasses import dataclass


class PotError(Exception):
    """Base class for all errors raised by this package."""


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class InvalidInstanceError(PotError, ValueError):
    """A POT instance failed validation.

    ``violations`` lists every broken invariant, not just the first one.
    """

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def codes(self):
        return tuple(v.code for v in self.violations)


class DimensionMismatch(PotError, ValueError):
    pass


class DualOverflowError(PotError, FloatingPointError):
    """An exponent in B(z) or e^u, e^v left the representable range."""

    def __init__(self, max_exponent: float, limit: float):
        self.max_exponent = float(max_exponent)
        self.limit = float(limit)
        super().__init__(f"exponent {self.max_exponent:.4g} exceeds {self.limit:g}")


class NonPositiveArgument(PotError, ValueError):
    pass


class DegenerateInstance(PotError, ValueError):
    pass


class PenaltyTooSmall(PotError, ValueError):
    pass


class UnbalancedMarginals(PotError, ValueError):
    pass


class StepSizeUnderflow(PotError, ArithmeticError):
    pass


class ZeroEntropy(PotError, ValueError):
    pass


class Infeasible(PotError):
    pass


class SizeLimitExceeded(PotError, ValueError):
    pass


class ZeroMassPlan(PotError, ValueError):
    pass


class DegenerateSvd(PotError, ArithmeticError):
    pass


class EmptyInput(PotError, ValueError):
    pass


class MaxIterationsExceeded(UserWarning):
    """Solver stopped at ``max_iterations`` before meeting its tolerance.

    Issued as a warning so that the plan and trace are still returned.
    """


class NoConvergence(UserWarning):
    """Registration hit ``max_registrations`` before the transform settled."""
