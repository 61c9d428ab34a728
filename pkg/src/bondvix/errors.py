"""Exception types shared across the package."""

from __future__ import annotations


class BondvixError(Exception):
    """Base class for all package-specific errors."""


class CsvParseError(BondvixError, ValueError):
    """A CSV row could not be parsed; carries the offending row number."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class EmptySeriesError(BondvixError, ValueError):
    """No usable observations remain after cleaning."""


class AlignmentError(BondvixError, ValueError):
    """Series do not share a usable common monthly grid."""


class DataDomainError(BondvixError, ValueError):
    """Input values violate a domain requirement (e.g. nonpositive index level)."""


class SingularDesignError(BondvixError, ValueError):
    """Regression design is rank deficient; carries the offending column names."""

    def __init__(self, message: str, columns: tuple[str, ...] = ()):
        super().__init__(message)
        self.columns = columns


class InfeasibleMomentsError(BondvixError, ValueError):
    """Target moments lie outside what the distribution family can attain.

    ``nearest`` holds the closest feasible parameter fit.
    """

    def __init__(self, message: str, nearest=None):
        super().__init__(message)
        self.nearest = nearest


class DivergenceError(BondvixError, RuntimeError):
    """A simulated chain left the representable range; carries the step index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class ModelFileError(BondvixError, ValueError):
    """A saved model file is unreadable, truncated, or has an unknown schema."""
