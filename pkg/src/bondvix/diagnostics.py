"""Residual diagnostic battery.

Empirical moments use 1/N central moments throughout (not 1/(N-1)), so the
skewness and excess kurtosis here are the plain standardized third and
fourth central moments.  Tests return a :class:`TestResult` carrying the
statistic, the p-value, and any nuisance settings (lag counts etc.).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps

from .regression import DesignMatrix, ols
from .validation import as_float_vector, check_min_length, check_nonconstant

__all__ = [
    "MomentSummary",
    "AcfResult",
    "TestResult",
    "moments",
    "acf",
    "jarque_bera",
    "jarque_bera_from_moments",
    "ljung_box",
    "adf_test",
    "qq_points",
    "correlation",
]


@dataclass(frozen=True)
class MomentSummary:
    """Mean, std (1/N denominator), skewness, and excess kurtosis."""

    mean: float
    std: float
    skewness: float
    excess_kurtosis: float

    def as_dict(self) -> dict[str, float]:
        return {
            "mean": self.mean,
            "std": self.std,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
        }


@dataclass(frozen=True)
class AcfResult:
    """Sample autocorrelations for lags 0..L with the flat 1.96/sqrt(n) band."""

    lags: np.ndarray
    values: np.ndarray
    bartlett_band: float


@dataclass(frozen=True)
class TestResult:
    test_name: str
    statistic: float
    p_value: float
    nuisance: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "test": self.test_name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            **self.nuisance,
        }


def moments(x) -> MomentSummary:
    """Empirical mean/std/skewness/excess kurtosis with 1/N central moments."""
    x = as_float_vector(x)
    check_min_length(x, 4)
    check_nonconstant(x)
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d**2))
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    s = math.sqrt(m2)
    return MomentSummary(
        mean=mean,
        std=s,
        skewness=m3 / s**3,
        excess_kurtosis=m4 / s**4 - 3.0,
    )


def acf(x, max_lag: int) -> AcfResult:
    """Autocorrelation function with the full-sample variance in the denominator."""
    x = as_float_vector(x)
    n = len(x)
    if not 0 <= max_lag < n / 2:
        raise ValueError(f"max_lag must be in [0, n/2) = [0, {n / 2}), got {max_lag}")
    check_nonconstant(x)
    d = x - x.mean()
    denom = float(d @ d)
    values = np.empty(max_lag + 1)
    values[0] = 1.0
    for lag in range(1, max_lag + 1):
        values[lag] = float(d[:-lag] @ d[lag:]) / denom
    return AcfResult(
        lags=np.arange(max_lag + 1), values=values, bartlett_band=1.96 / math.sqrt(n)
    )


def jarque_bera_from_moments(n: int, skewness: float, excess_kurtosis: float) -> TestResult:
    """The normality statistic n/6 (S^2 + K^2/4) with its chi-square(2) p-value."""
    jb = n / 6.0 * (skewness**2 + excess_kurtosis**2 / 4.0)
    # chi-square with 2 dof is exponential(1/2)
    p = math.exp(-jb / 2.0)
    return TestResult("jarque_bera", jb, p, {"n": n})


def jarque_bera(x) -> TestResult:
    x = as_float_vector(x)
    check_min_length(x, 8)
    m = moments(x)
    return jarque_bera_from_moments(len(x), m.skewness, m.excess_kurtosis)


def ljung_box(x, lags: int) -> TestResult:
    """Portmanteau autocorrelation test over the first ``lags`` lags."""
    x = as_float_vector(x)
    n = len(x)
    if not 1 <= lags < n / 4:
        raise ValueError(f"lags must be in [1, n/4), got {lags}")
    rho = acf(x, lags).values[1:]
    q = n * (n + 2.0) * float(np.sum(rho**2 / (n - np.arange(1, lags + 1))))
    p = float(_sps.chi2.sf(q, lags))
    return TestResult("ljung_box", q, p, {"lags": lags})


# Dickey-Fuller tau quantiles, constant-only regression, asymptotic sample size.
_ADF_TABLE = (
    (0.01, -3.43),
    (0.025, -3.12),
    (0.05, -2.86),
    (0.10, -2.57),
)
_ADF_P_MIN, _ADF_P_MAX = 1e-3, 0.999


def _adf_pvalue(stat: float) -> float:
    """Log-linear interpolation of tabulated quantiles, clamped to [0.001, 0.999]."""
    probs = [math.log(p) for p, _ in _ADF_TABLE]
    crits = [c for _, c in _ADF_TABLE]
    if stat <= crits[0]:
        lo, hi = 0, 1
    elif stat >= crits[-1]:
        lo, hi = len(crits) - 2, len(crits) - 1
    else:
        hi = next(i for i in range(1, len(crits)) if stat <= crits[i])
        lo = hi - 1
    slope = (probs[hi] - probs[lo]) / (crits[hi] - crits[lo])
    log_p = probs[lo] + slope * (stat - crits[lo])
    return float(min(max(math.exp(log_p), _ADF_P_MIN), _ADF_P_MAX))


def adf_test(x, lags: int = 15) -> TestResult:
    """Augmented Dickey-Fuller unit-root test (constant, no trend).

    Regresses the first difference on a constant, the lagged level, and
    ``lags`` lagged differences; the statistic is the t-ratio on the lagged
    level.  The p-value interpolates the constant-case quantile table, so it
    is most accurate between 1% and 10% and clamped to [0.001, 0.999].
    """
    x = as_float_vector(x)
    n = len(x)
    if lags < 0:
        raise ValueError("lags must be nonnegative")
    if n <= lags + 10:
        raise ValueError(f"need more than lags + 10 = {lags + 10} observations, got {n}")
    dx = np.diff(x)
    start = lags  # first usable index into dx
    y = dx[start:]
    cols: dict[str, np.ndarray] = {
        "const": np.ones_like(y),
        "level_lag1": x[start:-1],
    }
    for i in range(1, lags + 1):
        cols[f"diff_lag{i}"] = dx[start - i : len(dx) - i]
    fit = ols(DesignMatrix.from_columns(cols), y)
    stat = float(fit.t_stats[fit.names.index("level_lag1")])
    return TestResult("adf", stat, _adf_pvalue(stat), {"lags": lags, "nobs": fit.nobs})


def qq_points(x) -> np.ndarray:
    """Normal quantile-quantile pairs: (theoretical, standardized sample).

    The sample is sorted and standardized by its own mean and (1/N) std; the
    theoretical quantiles are standard-normal at (i - 0.5)/n.
    """
    x = as_float_vector(x)
    check_min_length(x, 3)
    check_nonconstant(x)
    mean = float(np.mean(x))
    std = float(np.std(x))
    n = len(x)
    theo = _sps.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    sample = (np.sort(x) - mean) / std
    return np.column_stack([theo, sample])


def correlation(x, y) -> float:
    """Pearson correlation of two equal-length, nonconstant vectors."""
    x = as_float_vector(x, "x")
    y = as_float_vector(y, "y")
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    check_min_length(x, 3)
    check_nonconstant(x, "x")
    check_nonconstant(y, "y")
    dx, dy = x - x.mean(), y - y.mean()
    return float(dx @ dy / math.sqrt((dx @ dx) * (dy @ dy)))
