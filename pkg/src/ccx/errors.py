"""Exception types shared across the package."""

from __future__ import annotations


class CCXError(Exception):
    """Base class for all package errors."""


class BadInput(CCXError, ValueError):
    """Invalid user-supplied parameters (CLI exit code 2)."""


class NumericalFailure(CCXError, ArithmeticError):
    """A numerical routine could not produce a trustworthy value (CLI exit code 3)."""


class ProfileError(BadInput):
    pass


class NegativeShift(BadInput):
    pass


class ZeroProfile(BadInput):
    pass


class BadRange(BadInput):
    pass


class DomainError(BadInput):
    pass


class DegenerateAnnulus(BadInput):
    pass


class DegenerateMeasures(BadInput):
    pass


class OutOfAnnulus(BadInput):
    pass


class MatrixConditionViolated(BadInput):
    def __init__(self, failed: list[str], values: dict[str, float]):
        self.failed = list(failed)
        self.values = dict(values)
        detail = ", ".join(f"{k}={v:.6g}" for k, v in values.items())
        super().__init__(f"matrix conditions violated: {', '.join(failed)} ({detail})")


class TransformNotInvertibleAt(NumericalFailure):
    def __init__(self, p):
        self.point = p
        super().__init__(f"argument map inverse did not converge at {p!r}")


class AtCore(BadInput):
    def __init__(self, p):
        self.point = p
        super().__init__(f"gradient undefined at core point {p!r}")


class OverflowDominant(NumericalFailure):
    def __init__(self, log_value: float):
        self.log_value = log_value
        super().__init__(f"integral exceeds double range (log value {log_value:.6g})")


class NoConvergence(NumericalFailure):
    pass


class GradientConstraintViolated(BadInput):
    pass


class ZeroField(CCXError):
    pass


class NoScale(CCXError):
    pass


class ScatteredMass(CCXError):
    pass
