"""Input validation helpers used by the estimators and the simulator."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .errors import AlignmentError, DataDomainError

if TYPE_CHECKING:
    from .series import MonthlySeries


def as_float_vector(x, name: str = "x") -> np.ndarray:
    """Coerce to a 1-D float array, rejecting NaN/inf."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataDomainError(f"{name} contains non-finite values")
    return arr


def check_min_length(x, n_min: int, name: str = "x") -> None:
    if len(x) < n_min:
        raise ValueError(f"{name} needs at least {n_min} observations, got {len(x)}")


def check_positive(values: np.ndarray, name: str) -> None:
    """Require every entry strictly positive."""
    if np.any(np.asarray(values) <= 0):
        bad = int(np.argmax(np.asarray(values) <= 0))
        raise DataDomainError(
            f"{name} must be strictly positive; first offending entry at index {bad}"
        )


def check_aligned(*series: "MonthlySeries") -> None:
    """Require all series to share an identical monthly grid."""
    if len(series) < 2:
        return
    ref = series[0]
    for s in series[1:]:
        if len(s.months) != len(ref.months) or not np.array_equal(s.months, ref.months):
            raise AlignmentError(
                f"series {s.name!r} is not aligned with {ref.name!r}: "
                f"{s.range_label()} vs {ref.range_label()}"
            )


def check_nonconstant(x: np.ndarray, name: str = "x") -> None:
    if np.ptp(np.asarray(x, dtype=float)) == 0.0:
        raise DataDomainError(f"{name} has zero variance")
