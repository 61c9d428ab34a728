"""Variance-gamma law: moment formulas, method-of-moments fit, sampling.

The parameterization is the normal variance-mean mixture
``W = location + asymmetry * G + scale * sqrt(G) * N`` with
``G ~ Gamma(1/shape, scale=shape)`` (so ``E G = 1``, ``Var G = shape``) and
``N`` standard normal.  ``shape`` controls tail weight (excess kurtosis
``3*shape`` in the symmetric case) and ``asymmetry`` controls skew; the
normal law is the ``shape -> 0`` limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .diagnostics import moments
from .errors import InfeasibleMomentsError
from .validation import as_float_vector, check_min_length

__all__ = ["VarianceGammaParams", "vg_from_moments", "fit_variance_gamma"]

_SHAPE_FLOOR = 1e-10
_W_CEILING = 1.0 - 1e-9


@dataclass(frozen=True)
class VarianceGammaParams:
    location: float
    scale: float
    asymmetry: float
    shape: float
    boundary: str | None = None

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")
        if self.shape <= 0:
            raise ValueError("shape must be positive")

    def moments(self) -> tuple[float, float, float, float]:
        """(mean, variance, skewness, excess kurtosis) implied by the parameters."""
        c, s, th, nu = self.location, self.scale, self.asymmetry, self.shape
        var = s**2 + th**2 * nu
        mu3 = 2.0 * th**3 * nu**2 + 3.0 * th * s**2 * nu
        exkurt = 3.0 * nu * (s**4 + 4.0 * s**2 * th**2 * nu + 2.0 * th**4 * nu**2) / var**2
        return c + th, var, mu3 / var**1.5, exkurt

    def mean_sqrt_gamma(self) -> float:
        """E[sqrt(G)] for the mixing gamma variable; tends to 1 as shape -> 0."""
        k = 1.0 / self.shape
        return math.sqrt(self.shape) * math.exp(math.lgamma(k + 0.5) - math.lgamma(k))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        g = rng.gamma(1.0 / self.shape, self.shape, size)
        n = rng.standard_normal(size)
        return self.location + self.asymmetry * g + self.scale * np.sqrt(g) * n

    def as_dict(self) -> dict:
        return {
            "location": self.location,
            "scale": self.scale,
            "asymmetry": self.asymmetry,
            "shape": self.shape,
            "boundary": self.boundary,
        }


def _skew_share(ratio: float) -> float:
    """Solve w (3 - w)^2 / (1 + 2 w - w^2) = ratio for w in [0, 1).

    The left side rises monotonically from 0 to 2, so a root exists iff
    ratio < 2, i.e. excess kurtosis exceeds 1.5 * skewness^2.
    """
    if ratio <= 0.0:
        return 0.0
    g = lambda w: w * (3.0 - w) ** 2 / (1.0 + 2.0 * w - w * w) - ratio
    return float(brentq(g, 0.0, _W_CEILING, xtol=1e-15, rtol=1e-15))


def _params_from_share(
    mean: float, variance: float, skew_sign: float, w: float, exkurt: float, boundary=None
) -> VarianceGammaParams:
    nu = exkurt / (3.0 * (1.0 + 2.0 * w - w * w))
    theta = skew_sign * math.sqrt(w * variance / nu) if w > 0 else 0.0
    sigma = math.sqrt(max(1.0 - w, 0.0) * variance)
    return VarianceGammaParams(mean - theta, sigma, theta, nu, boundary)


def vg_from_moments(
    mean: float, variance: float, skewness: float, excess_kurtosis: float
) -> VarianceGammaParams:
    """Match the four target moments exactly when attainable.

    Not every moment combination is reachable: excess kurtosis must be
    positive and exceed 1.5 * skewness^2.  Targets at or below the Gaussian
    limit return the normal-limit fit with ``boundary='gaussian_limit'``;
    skewness beyond the kurtosis bound raises
    :class:`InfeasibleMomentsError` carrying the nearest feasible fit.
    """
    if variance <= 0:
        raise ValueError("variance must be positive")
    if excess_kurtosis <= 0.0:
        return VarianceGammaParams(
            mean, math.sqrt(variance), 0.0, _SHAPE_FLOOR, boundary="gaussian_limit"
        )
    ratio = 3.0 * skewness**2 / excess_kurtosis
    sign = math.copysign(1.0, skewness) if skewness != 0.0 else 0.0
    if ratio >= 2.0:
        w = _skew_share(2.0 - 1e-9)
        nearest = _params_from_share(
            mean, variance, sign, w, excess_kurtosis, boundary="skewness_bound"
        )
        raise InfeasibleMomentsError(
            f"skewness^2 = {skewness**2:.6g} exceeds the attainable bound "
            f"(2/3) * excess_kurtosis = {2.0 * excess_kurtosis / 3.0:.6g}",
            nearest=nearest,
        )
    return _params_from_share(mean, variance, sign, _skew_share(ratio), excess_kurtosis)


def fit_variance_gamma(w) -> VarianceGammaParams:
    """Method-of-moments fit to a sample of innovations (n >= 100)."""
    w = as_float_vector(w, "innovations")
    check_min_length(w, 100, "innovations")
    m = moments(w)
    return vg_from_moments(m.mean, m.std**2, m.skewness, m.excess_kurtosis)
