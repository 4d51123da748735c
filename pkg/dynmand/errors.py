"""
Exception types raised by dynmand.

Mathematical outcomes (a failed hypothesis, a non-matching degree law) are
reported as values; these exceptions cover malformed input, resource limits
and numerical procedures that could not certify their result.
"""

from typing import Any, List, Optional


class DynmandError(Exception):
    """Base class for all dynmand errors."""


class FamilyParseError(DynmandError, ValueError):
    """Malformed polynomial or family text."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        pointer = ""
        if text:
            pointer = f"\n  {text}\n  {' ' * position}^"
        super().__init__(f"{message} at position {position}{pointer}")


class DegreeError(DynmandError, ValueError):
    """A polynomial of degree below 2 where a dynamical degree is required."""


class DegreeCapExceeded(DynmandError):
    """A symbolic iterate would exceed the configured degree cap."""

    def __init__(self, predicted: int, cap: int):
        self.predicted = predicted
        self.cap = cap
        super().__init__(f"predicted degree {predicted} exceeds degree cap {cap}")


class OutsideCertifiedDomain(DynmandError):
    """A point lies outside the region where the Böttcher product is certified."""

    def __init__(self, z: Any, reason: str):
        self.z = z
        self.reason = reason
        super().__init__(f"outside certified domain at z={z}: {reason}")


class RootFindingError(DynmandError):
    """Simultaneous root refinement did not converge."""

    def __init__(self, message: str, residuals: Optional[List[float]] = None):
        self.residuals = residuals or []
        super().__init__(message)


class CertificationError(DynmandError):
    """A probe-grid certificate failed at some parameter."""

    def __init__(self, message: str, failing_lambda: Any = None):
        self.failing_lambda = failing_lambda
        super().__init__(message if failing_lambda is None else f"{message} (failing lambda={failing_lambda})")


class HypothesisError(DynmandError):
    """The degree hypothesis m >= m_r (and m >= 1 for constant families) fails."""
