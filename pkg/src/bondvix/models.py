"""Estimators for the volatility-linked rate and return models.

Each estimator follows the scikit-learn convention: construct with
hyperparameters only, call ``fit`` with the monthly series, read fitted
values from trailing-underscore attributes.  All fits run through the
package's own OLS engine, so coefficient tables, p-values, and residual
vectors share one code path.

Unit conventions: rates and spreads enter in percentage points, log
returns in natural-log decimals per month, and the volatility index as
published.  The returns models convert rates to decimals internally
(``r = R / 100``) before applying the fixed 1/12 monthly yield accrual; the
reported duration is therefore in years of rate sensitivity.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .diagnostics import MomentSummary, moments
from .errors import ModelFileError
from .regression import DesignMatrix, OlsFit, ols
from .series import MonthlySeries, format_month
from .validation import check_aligned, check_min_length, check_positive

__all__ = [
    "RateAr",
    "RateVolModel",
    "VixAr",
    "ReturnsModel",
    "ReturnsVolModel",
    "ResidualComparison",
    "compare_residuals",
    "save_model",
    "load_model",
    "build_joint_spec",
]

SCHEMA_VERSION = 1
MIN_OBS = 30

VARIANT_SINGLE = "single"
VARIANT_LAGGED = "with_lagged_rate"


def _require_variant(variant: str) -> None:
    if variant not in (VARIANT_SINGLE, VARIANT_LAGGED):
        raise ValueError(f"variant must be {VARIANT_SINGLE!r} or {VARIANT_LAGGED!r}")


class _FittedSeriesMixin:
    """Bookkeeping shared by the estimators: window and series-name metadata."""

    def _remember(self, roles: dict[str, MonthlySeries]) -> None:
        ref = next(iter(roles.values()))
        self.series_names_ = {role: s.name for role, s in roles.items()}
        self.window_ = (format_month(ref.months[0]), format_month(ref.months[-1]))
        self.residual_months_ = ref.months[1:].copy()

    def _check_fitted(self):
        if not hasattr(self, "ols_"):
            raise RuntimeError(f"{type(self).__name__} is not fitted")


class RateAr(BaseEstimator, _FittedSeriesMixin):
    """AR(1) for a monthly rate or spread, estimated in differenced form.

    The regression is ``diff(R)_t = a + (b - 1) R_{t-1} + e_t``; ``b_`` is
    reported on the level scale (unit root at ``b_ == 1``).
    """

    def fit(self, rate: MonthlySeries) -> "RateAr":
        check_min_length(rate, MIN_OBS, rate.name)
        r = rate.values
        y = np.diff(r)
        design = DesignMatrix.from_columns({"const": np.ones_like(y), "rate_lag": r[:-1]})
        fit = ols(design, y)
        self.a_ = fit.coefficient("const")
        self.b_ = 1.0 + fit.coefficient("rate_lag")
        self.residuals_ = fit.residuals
        self.ols_ = fit
        self._remember({"rate": rate})
        return self


class RateVolModel(BaseEstimator, _FittedSeriesMixin):
    """Rate AR(1) with a volatility term, fitted on the volatility-scaled form.

    The level model is ``R_t = a + b R_{t-1} + c V_t + V_t Z_t``; dividing by
    the contemporaneous volatility and differencing gives the regression
    actually run, ``diff(R)_t / V_t`` on ``1/V_t``, ``R_{t-1}/V_t`` and an
    intercept (which is ``c``).  Residuals are the volatility-scaled
    innovations ``Z_t``.  A constant volatility series makes ``1/V_t``
    collinear with the intercept and raises a singular-design error.
    """

    def fit(self, rate: MonthlySeries, vix: MonthlySeries) -> "RateVolModel":
        check_aligned(rate, vix)
        check_min_length(rate, MIN_OBS, rate.name)
        check_positive(vix.values, vix.name)
        r, v = rate.values, vix.values[1:]
        y = np.diff(r) / v
        design = DesignMatrix.from_columns(
            {
                "inv_vol": 1.0 / v,
                "rate_lag_over_vol": r[:-1] / v,
                "const": np.ones_like(y),
            }
        )
        fit = ols(design, y)
        self.a_ = fit.coefficient("inv_vol")
        self.b_ = 1.0 + fit.coefficient("rate_lag_over_vol")
        self.c_ = fit.coefficient("const")
        self.residuals_ = fit.residuals
        self.ols_ = fit
        self._remember({"rate": rate, "vix": vix})
        return self


class VixAr(BaseEstimator, _FittedSeriesMixin):
    """AR(1) for the logarithm of the volatility index.

    ``ln V_t = alpha + beta ln V_{t-1} + W_t``; ``innovations_`` holds the
    fitted ``W_t``.
    """

    def fit(self, vix: MonthlySeries) -> "VixAr":
        check_min_length(vix, MIN_OBS, vix.name)
        check_positive(vix.values, vix.name)
        ln_v = np.log(vix.values)
        y = ln_v[1:]
        design = DesignMatrix.from_columns(
            {"const": np.ones_like(y), "log_vix_lag": ln_v[:-1]}
        )
        fit = ols(design, y)
        self.alpha_ = fit.coefficient("const")
        self.beta_ = fit.coefficient("log_vix_lag")
        self.innovations_ = fit.residuals
        self.residuals_ = fit.residuals
        self.ols_ = fit
        self._remember({"vix": vix})
        return self


def _returns_target(returns: MonthlySeries, rate: MonthlySeries) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Excess-of-accrual target and decimal rate pieces shared by the returns models.

    Returns (y, rate_lag, rate_diff) with the rate converted to decimal and
    the fixed 1/12 monthly accrual of the lagged rate moved to the left side.
    """
    r = rate.values / 100.0
    q = returns.values[1:]
    y = q - r[:-1] / 12.0
    return y, r[:-1], np.diff(r)


class ReturnsModel(BaseEstimator, _FittedSeriesMixin):
    """Bond total-return regression on the beginning-of-month rate and its change.

    ``Q_t - r_{t-1}/12 = k r_{t-1} - D diff(r)_t + h + delta_t`` with rates in
    decimal; ``variant='single'`` drops the ``k r_{t-1}`` term (``k_ == 0``).
    ``duration_`` is ``D``, the rate sensitivity in years.
    """

    def __init__(self, variant: str = VARIANT_SINGLE):
        self.variant = variant

    def fit(self, returns: MonthlySeries, rate: MonthlySeries) -> "ReturnsModel":
        _require_variant(self.variant)
        check_aligned(returns, rate)
        check_min_length(returns, MIN_OBS, returns.name)
        y, rate_lag, rate_diff = _returns_target(returns, rate)
        cols: dict[str, np.ndarray] = {}
        if self.variant == VARIANT_LAGGED:
            cols["rate_lag"] = rate_lag
        cols["rate_diff"] = rate_diff
        cols["const"] = np.ones_like(y)
        fit = ols(DesignMatrix.from_columns(cols), y)
        self.k_ = fit.coefficient("rate_lag") if self.variant == VARIANT_LAGGED else 0.0
        self.duration_ = -fit.coefficient("rate_diff")
        self.h_ = fit.coefficient("const")
        self.l_ = 0.0
        self.residuals_ = fit.residuals
        self.ols_ = fit
        self._remember({"returns": returns, "rate": rate})
        return self


class ReturnsVolModel(BaseEstimator, _FittedSeriesMixin):
    """Volatility-scaled bond total-return regression.

    The level model is ``Q_t - r_{t-1}/12 = k r_{t-1} - D diff(r)_t + h V_t
    + l + V_t U_t``; dividing through by the volatility gives the regression
    run here, whose intercept is ``h`` and whose ``1/V_t`` coefficient is
    ``l``.  Residuals are the scaled innovations.
    """

    def __init__(self, variant: str = VARIANT_SINGLE):
        self.variant = variant

    def fit(
        self, returns: MonthlySeries, rate: MonthlySeries, vix: MonthlySeries
    ) -> "ReturnsVolModel":
        _require_variant(self.variant)
        check_aligned(returns, rate, vix)
        check_min_length(returns, MIN_OBS, returns.name)
        check_positive(vix.values, vix.name)
        y, rate_lag, rate_diff = _returns_target(returns, rate)
        v = vix.values[1:]
        y = y / v
        cols: dict[str, np.ndarray] = {}
        if self.variant == VARIANT_LAGGED:
            cols["rate_lag_over_vol"] = rate_lag / v
        cols["rate_diff_over_vol"] = rate_diff / v
        cols["const"] = np.ones_like(y)
        cols["inv_vol"] = 1.0 / v
        fit = ols(DesignMatrix.from_columns(cols), y)
        self.k_ = (
            fit.coefficient("rate_lag_over_vol") if self.variant == VARIANT_LAGGED else 0.0
        )
        self.duration_ = -fit.coefficient("rate_diff_over_vol")
        self.h_ = fit.coefficient("const")
        self.l_ = fit.coefficient("inv_vol")
        self.residuals_ = fit.residuals
        self.ols_ = fit
        self._remember({"returns": returns, "rate": rate, "vix": vix})
        return self


@dataclass(frozen=True)
class ResidualComparison:
    """Moment summaries of raw residuals, the same residuals divided by the
    volatility, and the residuals of the volatility-scaled refit."""

    original: MomentSummary
    normalized: MomentSummary
    refit_normalized: MomentSummary


def compare_residuals(original, vol, refit) -> ResidualComparison:
    original = np.asarray(original, dtype=float)
    vol = np.asarray(vol, dtype=float)
    refit = np.asarray(refit, dtype=float)
    if not (len(original) == len(vol) == len(refit)):
        raise ValueError(
            f"length mismatch: original {len(original)}, vol {len(vol)}, refit {len(refit)}"
        )
    check_positive(vol, "vol")
    return ResidualComparison(
        original=moments(original),
        normalized=moments(original / vol),
        refit_normalized=moments(refit),
    )


def build_joint_spec(
    vix_model: VixAr,
    rate_model: RateVolModel,
    returns_model: ReturnsVolModel | None = None,
    innovations: str = "bootstrap",
):
    """Assemble a simulator spec from fitted estimators.

    The rate chain keeps percentage-point units, so the returns coefficients
    (fitted on decimal rates, with the 1/12 accrual on the left side) are
    rescaled: the simulated return equation uses ``k = (k_fit + 1/12)/100``
    and ``m = duration/100`` against the percent-unit rate state.

    ``innovations`` picks the source: ``"bootstrap"`` resamples the fitted
    residual triples jointly, ``"gaussian"`` matches their covariance, and
    ``"vg"`` fits a variance-gamma law to the volatility innovations with
    Gaussian rate/return innovations at the fitted correlations.
    """
    from . import simulate as sim
    from .diagnostics import correlation
    from .vargamma import fit_variance_gamma

    vix_model._check_fitted()
    rate_model._check_fitted()
    w = np.asarray(vix_model.innovations_, dtype=float)
    z = np.asarray(rate_model.residuals_, dtype=float)
    if len(w) != len(z) or not np.array_equal(
        vix_model.residual_months_, rate_model.residual_months_
    ):
        raise ValueError("volatility and rate models were not fitted on the same window")
    u = None
    returns_params = None
    if returns_model is not None:
        returns_model._check_fitted()
        u = np.asarray(returns_model.residuals_, dtype=float)
        if len(u) != len(w) or not np.array_equal(
            returns_model.residual_months_, rate_model.residual_months_
        ):
            raise ValueError("returns model was not fitted on the same window")
        returns_params = sim.ReturnsParams(
            k=(returns_model.k_ + 1.0 / 12.0) / 100.0,
            m=returns_model.duration_ / 100.0,
            h=returns_model.h_,
            l=returns_model.l_,
        )

    if innovations == "bootstrap":
        source = sim.BootstrapSource.from_residuals(w, z, u)
    elif innovations == "gaussian":
        rows = np.column_stack([np.zeros_like(w) if u is None else u, z, w])
        source = sim.GaussianSource(np.cov(rows, rowvar=False, ddof=1))
    elif innovations == "vg":
        vg = fit_variance_gamma(w)
        sigma_z = float(np.std(z))
        rho_zw = correlation(z, w)
        if u is None:
            source = sim.VgGaussianSource(vg, sigma_z=sigma_z, rho_zw=rho_zw)
        else:
            source = sim.VgGaussianSource(
                vg,
                sigma_z=sigma_z,
                rho_zw=rho_zw,
                sigma_u=float(np.std(u)),
                rho_uw=correlation(u, w),
            )
    else:
        raise ValueError(f"unknown innovation source choice {innovations!r}")

    return sim.JointModelSpec(
        vix=sim.VixParams(alpha=vix_model.alpha_, beta=vix_model.beta_),
        rate=sim.RateParams(a=rate_model.a_, b=rate_model.b_, c=rate_model.c_),
        returns=returns_params,
        innovations=source,
    )


_MODEL_KINDS: dict[str, type] = {
    "rate_ar": RateAr,
    "rate_vol": RateVolModel,
    "vix_ar": VixAr,
    "returns": ReturnsModel,
    "returns_vol": ReturnsVolModel,
}
_PARAM_FIELDS: dict[str, tuple[str, ...]] = {
    "rate_ar": ("a_", "b_"),
    "rate_vol": ("a_", "b_", "c_"),
    "vix_ar": ("alpha_", "beta_"),
    "returns": ("k_", "duration_", "h_", "l_"),
    "returns_vol": ("k_", "duration_", "h_", "l_"),
}


def _model_kind(model) -> str:
    for kind, cls in _MODEL_KINDS.items():
        if type(model) is cls:
            return kind
    raise TypeError(f"unknown model type: {type(model).__name__}")


def _ols_payload(fit: OlsFit) -> dict:
    return {
        "names": list(fit.names),
        "coefficients": fit.coefficients.tolist(),
        "standard_errors": fit.standard_errors.tolist(),
        "t_stats": fit.t_stats.tolist(),
        "p_values": fit.p_values.tolist(),
        "r_squared": fit.r_squared,
        "adj_r_squared": fit.adj_r_squared,
        "residual_variance": fit.residual_variance,
        "nobs": fit.nobs,
        "dof": fit.dof,
    }


def _ols_restore(payload: dict, residuals: np.ndarray) -> OlsFit:
    return OlsFit(
        names=tuple(payload["names"]),
        coefficients=np.asarray(payload["coefficients"], dtype=float),
        standard_errors=np.asarray(payload["standard_errors"], dtype=float),
        t_stats=np.asarray(payload["t_stats"], dtype=float),
        p_values=np.asarray(payload["p_values"], dtype=float),
        r_squared=payload["r_squared"],
        adj_r_squared=payload["adj_r_squared"],
        residuals=residuals,
        residual_variance=payload["residual_variance"],
        nobs=payload["nobs"],
        dof=payload["dof"],
    )


def save_model(model, path, fitted_at: str | None = None) -> None:
    """Write a fitted estimator to JSON.

    ``fitted_at`` is optional so that pipeline outputs stay byte-identical
    across reruns; pass an ISO timestamp to record one.
    """
    model._check_fitted()
    kind = _model_kind(model)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "model_kind": kind,
        "params": {f.rstrip("_"): float(getattr(model, f)) for f in _PARAM_FIELDS[kind]},
        "hyperparams": model.get_params(),
        "residuals": np.asarray(model.residuals_).tolist(),
        "residual_months": np.asarray(model.residual_months_).tolist(),
        "series_names": model.series_names_,
        "window": list(model.window_),
        "ols": _ols_payload(model.ols_),
        "fitted_at": fitted_at,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    # write-then-rename so a crash cannot leave a truncated model behind
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path):
    """Read a model saved by :func:`save_model`; returns the fitted estimator."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from None
    if not isinstance(payload, dict) or "schema_version" not in payload:
        raise ModelFileError(f"{path} is not a model file")
    if payload["schema_version"] != SCHEMA_VERSION:
        raise ModelFileError(
            f"{path}: unsupported schema version {payload['schema_version']!r} "
            f"(expected {SCHEMA_VERSION})"
        )
    kind = payload.get("model_kind")
    if kind not in _MODEL_KINDS:
        raise ModelFileError(f"{path}: unknown model kind {kind!r}")
    try:
        model = _MODEL_KINDS[kind](**payload.get("hyperparams", {}))
        for field_name in _PARAM_FIELDS[kind]:
            setattr(model, field_name, float(payload["params"][field_name.rstrip("_")]))
        residuals = np.asarray(payload["residuals"], dtype=float)
        model.residuals_ = residuals
        if kind == "vix_ar":
            model.innovations_ = residuals
        model.residual_months_ = np.asarray(payload["residual_months"], dtype=int)
        model.series_names_ = dict(payload["series_names"])
        model.window_ = tuple(payload["window"])
        model.ols_ = _ols_restore(payload["ols"], residuals)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"{path}: malformed model payload: {exc}") from None
    return model
