"""Ordinary least squares with classical (homoscedastic) inference.

The solver uses an orthogonal (QR) factorization rather than normal
equations: the volatility-scaled designs pair near-collinear columns such
as the reciprocal of volatility and a lagged rate over volatility, and the
normal equations square the condition number.

Student-t tail probabilities are evaluated from the regularized incomplete
beta function, computed here by a modified Lentz continued fraction, so the
engine carries no statistics-library dependency for its p-values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularDesignError

__all__ = ["DesignMatrix", "OlsFit", "ols", "t_test_pvalue", "regularized_incomplete_beta"]

RANK_TOLERANCE_FACTOR = 1e-10


@dataclass(frozen=True)
class DesignMatrix:
    """An n-by-k regressor matrix with unique column names.

    Requires n > k, no all-zero column, and finite entries.
    """

    matrix: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if X.ndim != 2:
            raise ValueError("design matrix must be two-dimensional")
        names = tuple(self.names)
        n, k = X.shape
        if len(names) != k:
            raise ValueError(f"{k} columns but {len(names)} names")
        if len(set(names)) != k:
            raise ValueError(f"column names are not unique: {names}")
        if n <= k:
            raise ValueError(f"need more rows ({n}) than columns ({k})")
        if not np.all(np.isfinite(X)):
            raise ValueError("design matrix contains non-finite entries")
        zero = [names[j] for j in range(k) if not np.any(X[:, j])]
        if zero:
            raise SingularDesignError(
                f"all-zero column(s): {', '.join(zero)}", columns=tuple(zero)
            )
        object.__setattr__(self, "matrix", X)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_columns(cls, columns: dict[str, np.ndarray]) -> "DesignMatrix":
        names = tuple(columns)
        X = np.column_stack([np.asarray(columns[c], dtype=float) for c in names])
        return cls(X, names)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class OlsFit:
    """Coefficient estimates with classical standard errors and fit statistics."""

    names: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    adj_r_squared: float
    residuals: np.ndarray
    residual_variance: float
    nobs: int
    dof: int

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def p_value(self, name: str) -> float:
        return float(self.p_values[self.names.index(name)])

    def standard_error(self, name: str) -> float:
        return float(self.standard_errors[self.names.index(name)])

    def summary_rows(self) -> list[dict]:
        return [
            {
                "name": self.names[i],
                "coefficient": float(self.coefficients[i]),
                "standard_error": float(self.standard_errors[i]),
                "t_stat": float(self.t_stats[i]),
                "p_value": float(self.p_values[i]),
            }
            for i in range(len(self.names))
        ]


def _dependent_columns(X: np.ndarray, names: tuple[str, ...], svals: np.ndarray) -> tuple[str, ...]:
    """Name columns lying (numerically) in the span of the others."""
    n, k = X.shape
    offenders = []
    for j in range(k):
        others = np.delete(X, j, axis=1)
        if others.shape[1] == 0:
            continue
        coef, _, _, _ = np.linalg.lstsq(others, X[:, j], rcond=None)
        resid = X[:, j] - others @ coef
        scale = np.linalg.norm(X[:, j])
        if scale == 0 or np.linalg.norm(resid) <= 1e-8 * scale:
            offenders.append(names[j])
    return tuple(offenders) if offenders else names


def ols(design: DesignMatrix, y) -> OlsFit:
    """Least-squares fit of y on the design, with t-tests against zero.

    Standard errors use s^2 (X'X)^{-1} with s^2 = RSS / (n - k); p-values are
    two-sided Student-t with n - k degrees of freedom.  Raises
    :class:`SingularDesignError` naming the offending columns when the design
    is numerically rank deficient.
    """
    X = design.matrix
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")

    svals = np.linalg.svd(X, compute_uv=False)
    if svals[-1] <= RANK_TOLERANCE_FACTOR * svals[0]:
        cols = _dependent_columns(X, design.names, svals)
        raise SingularDesignError(
            "design is rank deficient (smallest/largest singular value = "
            f"{svals[-1] / svals[0]:.2e}); offending column(s): {', '.join(cols)}",
            columns=cols,
        )

    Q, R = np.linalg.qr(X, mode="reduced")
    beta = np.linalg.solve(R, Q.T @ y)
    fitted = X @ beta
    residuals = y - fitted
    rss = float(residuals @ residuals)
    dof = n - k
    s2 = rss / dof

    # (X'X)^{-1} = R^{-1} R^{-T}, reusing the factorization
    r_inv = np.linalg.solve(R, np.eye(k))
    xtx_inv_diag = np.sum(r_inv * r_inv, axis=1)
    se = np.sqrt(s2 * xtx_inv_diag)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    p_values = np.array([t_test_pvalue(t, dof) for t in t_stats])

    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / dof

    return OlsFit(
        names=design.names,
        coefficients=beta,
        standard_errors=se,
        t_stats=t_stats,
        p_values=p_values,
        r_squared=r2,
        adj_r_squared=adj_r2,
        residuals=residuals,
        residual_variance=s2,
        nobs=n,
        dof=dof,
    )


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iter = 500
    eps = 1e-16
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to about 1e-14 for moderate a, b."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def t_test_pvalue(t: float, dof: int) -> float:
    """Two-sided Student-t tail probability P(|T_dof| >= |t|)."""
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    t = float(t)
    if not math.isfinite(t):
        return 0.0
    if t == 0.0:
        return 1.0
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(0.5 * dof, 0.5, x)
