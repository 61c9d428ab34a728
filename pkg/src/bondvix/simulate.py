"""Seeded Monte Carlo for the coupled volatility / rate / return chain.

The state recursion is

    ln V_t = alpha + beta ln V_{t-1} + W_t
    R_t    = a + b R_{t-1} + c V_t + V_t Z_t
    Q_t    = k R_{t-1} - m (R_t - R_{t-1}) + h V_t + l + V_t U_t   (optional)

driven by i.i.d. innovation triples (U, Z, W) from a pluggable source.
Volatility stays positive structurally; paths are bitwise deterministic
given (spec, seed, T, initial); every path stores its innovations so the
recursion can be replayed exactly.

Ergodicity is checked empirically, not proved: chains launched from distant
initial conditions are compared coordinate-by-coordinate with two-sample
Kolmogorov-Smirnov statistics on their post-burn-in marginals.  This is a
proxy for total-variation convergence, and the default threshold (0.05) is
calibrated to the pooled sample sizes used by the acceptance checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .vargamma import VarianceGammaParams

__all__ = [
    "VixParams",
    "RateParams",
    "ReturnsParams",
    "GaussianSource",
    "VgGaussianSource",
    "BootstrapSource",
    "JointModelSpec",
    "SimulationPath",
    "Finding",
    "simulate",
    "validate_assumptions",
    "ergodicity_diagnostic",
    "stationary_moments",
    "ks_two_sample",
    "ConvergenceReport",
    "MomentEstimate",
    "source_from_dict",
    "anchor_state",
]

LOG_V_LIMIT = 700.0


@dataclass(frozen=True)
class VixParams:
    alpha: float
    beta: float


@dataclass(frozen=True)
class RateParams:
    a: float
    b: float
    c: float


@dataclass(frozen=True)
class ReturnsParams:
    k: float
    m: float
    h: float
    l: float


class GaussianSource:
    """Jointly Gaussian innovation triples with a fixed (U, Z, W) covariance."""

    kind = "gaussian"

    def __init__(self, cov):
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (3, 3):
            raise ValueError(f"covariance must be 3x3 over (U, Z, W), got {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        eig = np.linalg.eigvalsh(cov)
        if eig[0] < -1e-10 * max(1.0, eig[-1]):
            raise ValueError(f"covariance is not positive semidefinite (min eig {eig[0]:.3e})")
        self.cov = cov

    @classmethod
    def from_sigmas(
        cls,
        sigma_w: float,
        sigma_z: float,
        rho_zw: float = 0.0,
        sigma_u: float = 0.0,
        rho_uw: float = 0.0,
    ) -> "GaussianSource":
        cov = np.diag([sigma_u**2, sigma_z**2, sigma_w**2]).astype(float)
        cov[1, 2] = cov[2, 1] = rho_zw * sigma_z * sigma_w
        cov[0, 2] = cov[2, 0] = rho_uw * sigma_u * sigma_w
        return cls(cov)

    @property
    def w_std(self) -> float:
        return math.sqrt(self.cov[2, 2])

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        draws = rng.multivariate_normal(np.zeros(3), self.cov, size=size, method="svd")
        return draws[:, 0], draws[:, 1], draws[:, 2]

    def component_means(self) -> np.ndarray:
        return np.zeros(3)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "cov": self.cov.tolist()}


class VgGaussianSource:
    """Variance-gamma W with exactly Gaussian Z and U tied to it.

    W is built as ``location + asymmetry G + scale sqrt(G) N_w``; Z and U mix
    the same ``N_w`` with fresh normals, so each is exactly Gaussian while
    carrying the requested correlation with W.  The attainable |correlation|
    is capped at ``scale * E[sqrt(G)] / std(W)``.
    """

    kind = "vg_w_gaussian_z"

    def __init__(
        self,
        w_params: VarianceGammaParams,
        sigma_z: float,
        rho_zw: float = 0.0,
        sigma_u: float = 0.0,
        rho_uw: float = 0.0,
    ):
        if sigma_z <= 0:
            raise ValueError("sigma_z must be positive")
        if sigma_u < 0:
            raise ValueError("sigma_u must be nonnegative")
        self.w_params = w_params
        self.sigma_z = float(sigma_z)
        self.rho_zw = float(rho_zw)
        self.sigma_u = float(sigma_u)
        self.rho_uw = float(rho_uw)
        _, w_var, _, _ = w_params.moments()
        self._w_sd = math.sqrt(w_var)
        cap = w_params.scale * w_params.mean_sqrt_gamma() / self._w_sd
        self._mix_z = self._solve_mix(rho_zw, cap, "rho_zw")
        self._mix_u = self._solve_mix(rho_uw, cap, "rho_uw") if sigma_u > 0 else 0.0

    @staticmethod
    def _solve_mix(rho: float, cap: float, name: str) -> float:
        if rho == 0.0:
            return 0.0
        if cap <= 0.0 or abs(rho) > cap:
            raise ValueError(
                f"requested {name}={rho} exceeds the attainable bound {cap:.4f} "
                "for this variance-gamma W"
            )
        return rho / cap

    @property
    def w_std(self) -> float:
        return self._w_sd

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        p = self.w_params
        g = rng.gamma(1.0 / p.shape, p.shape, size)
        n_w = rng.standard_normal(size)
        n_z = rng.standard_normal(size)
        n_u = rng.standard_normal(size)
        w = p.location + p.asymmetry * g + p.scale * np.sqrt(g) * n_w
        z = self.sigma_z * (self._mix_z * n_w + math.sqrt(1.0 - self._mix_z**2) * n_z)
        u = self.sigma_u * (self._mix_u * n_w + math.sqrt(1.0 - self._mix_u**2) * n_u)
        return u, z, w

    def component_means(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.w_params.location + self.w_params.asymmetry])

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "w_params": self.w_params.as_dict(),
            "sigma_z": self.sigma_z,
            "rho_zw": self.rho_zw,
            "sigma_u": self.sigma_u,
            "rho_uw": self.rho_uw,
        }


class BootstrapSource:
    """Joint row resampling of fitted residual triples.

    Whole rows are drawn so the cross-innovation dependence seen in the data
    (Z against W in particular) survives, while draws stay i.i.d. over time.
    """

    kind = "bootstrap"

    def __init__(self, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 3:
            raise ValueError(f"rows must be (n, 3) over (U, Z, W), got {rows.shape}")
        if rows.shape[0] < 10:
            raise ValueError("need at least 10 residual rows to resample")
        if not np.all(np.isfinite(rows)):
            raise ValueError("residual rows contain non-finite values")
        self.rows = rows

    @classmethod
    def from_residuals(cls, w, z, u=None) -> "BootstrapSource":
        w = np.asarray(w, dtype=float)
        z = np.asarray(z, dtype=float)
        u = np.zeros_like(w) if u is None else np.asarray(u, dtype=float)
        if not (len(w) == len(z) == len(u)):
            raise ValueError("residual vectors must be time-aligned (equal length)")
        return cls(np.column_stack([u, z, w]))

    @property
    def w_std(self) -> float:
        return float(np.std(self.rows[:, 2]))

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = rng.integers(0, self.rows.shape[0], size=size)
        picked = self.rows[idx]
        return picked[:, 0], picked[:, 1], picked[:, 2]

    def component_means(self) -> np.ndarray:
        return self.rows.mean(axis=0)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "rows": self.rows.tolist()}


def source_from_dict(payload: dict):
    kind = payload.get("kind")
    if kind == "gaussian":
        return GaussianSource(payload["cov"])
    if kind == "vg_w_gaussian_z":
        wp = dict(payload["w_params"])
        return VgGaussianSource(
            VarianceGammaParams(
                wp["location"], wp["scale"], wp["asymmetry"], wp["shape"], wp.get("boundary")
            ),
            sigma_z=payload["sigma_z"],
            rho_zw=payload.get("rho_zw", 0.0),
            sigma_u=payload.get("sigma_u", 0.0),
            rho_uw=payload.get("rho_uw", 0.0),
        )
    if kind == "bootstrap":
        return BootstrapSource(payload["rows"])
    raise ValueError(f"unknown innovation source kind {kind!r}")


@dataclass(frozen=True)
class JointModelSpec:
    """Parameters and innovation source for the combined chain."""

    vix: VixParams
    rate: RateParams
    innovations: GaussianSource | VgGaussianSource | BootstrapSource
    returns: ReturnsParams | None = None

    @property
    def v_star(self) -> float:
        """Zero-noise fixed point of the volatility chain (needs beta < 1)."""
        if not self.vix.beta < 1.0:
            raise ValueError("volatility chain has no fixed point for beta >= 1")
        return math.exp(self.vix.alpha / (1.0 - self.vix.beta))

    @property
    def r_star(self) -> float:
        """Zero-noise fixed point of the rate chain (needs b < 1 as well)."""
        if not self.rate.b < 1.0:
            raise ValueError("rate chain has no fixed point for b >= 1")
        return (self.rate.a + self.rate.c * self.v_star) / (1.0 - self.rate.b)

    def default_burn_in(self) -> int:
        """Several autocorrelation times: ceil(10 / (1 - max(b, beta)))."""
        persistence = max(self.rate.b, self.vix.beta)
        if persistence >= 1.0:
            raise ValueError("no finite default burn-in for a non-mean-reverting spec")
        return math.ceil(10.0 / (1.0 - persistence))

    def as_dict(self) -> dict:
        return {
            "vix": {"alpha": self.vix.alpha, "beta": self.vix.beta},
            "rate": {"a": self.rate.a, "b": self.rate.b, "c": self.rate.c},
            "returns": None
            if self.returns is None
            else {
                "k": self.returns.k,
                "m": self.returns.m,
                "h": self.returns.h,
                "l": self.returns.l,
            },
            "innovations": self.innovations.as_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "JointModelSpec":
        returns = payload.get("returns")
        return cls(
            vix=VixParams(**payload["vix"]),
            rate=RateParams(**payload["rate"]),
            returns=None if returns is None else ReturnsParams(**returns),
            innovations=source_from_dict(payload["innovations"]),
        )


@dataclass(frozen=True)
class SimulationPath:
    """One realization of the chain; index 0 holds the initial condition.

    ``v``, ``r`` (and ``q`` when returns are simulated) have length T + 1;
    the stored innovations have length T so the recursion can be replayed.
    """

    seed: object
    v: np.ndarray
    r: np.ndarray
    q: np.ndarray | None
    innovations_u: np.ndarray
    innovations_z: np.ndarray
    innovations_w: np.ndarray

    @property
    def length(self) -> int:
        return len(self.v) - 1

    def replay_error(self, spec: JointModelSpec) -> float:
        """Max absolute gap between stored states and the recursion re-run
        from the stored innovations."""
        ln_v = np.log(self.v[0])
        r = self.r[0]
        err = 0.0
        for t in range(self.length):
            ln_v = spec.vix.alpha + spec.vix.beta * ln_v + self.innovations_w[t]
            v = math.exp(ln_v)
            r_prev = r
            r = spec.rate.a + spec.rate.b * r_prev + spec.rate.c * v + v * self.innovations_z[t]
            err = max(err, abs(v - self.v[t + 1]), abs(r - self.r[t + 1]))
            if self.q is not None and spec.returns is not None:
                p = spec.returns
                q = p.k * r_prev - p.m * (r - r_prev) + p.h * v + p.l + v * self.innovations_u[t]
                err = max(err, abs(q - self.q[t + 1]))
        return err

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,V,R,Q\n")
            for t in range(len(self.v)):
                q = "" if self.q is None else repr(float(self.q[t]))
                fh.write(f"{t},{self.v[t]!r},{self.r[t]!r},{q}\n")


def simulate(
    spec: JointModelSpec,
    T: int,
    seed,
    initial: tuple,
) -> SimulationPath:
    """Run the recursion for T steps from ``initial = (V0, R0[, Q0])``.

    Deterministic given (spec, seed, T, initial).  Raises
    :class:`DivergenceError` naming the step if |ln V| exceeds 700 or the
    rate/return states stop being finite.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    v0 = float(initial[0])
    r0 = float(initial[1])
    q0 = float(initial[2]) if len(initial) > 2 else 0.0
    if v0 <= 0:
        raise ValueError("initial volatility must be positive")

    rng = np.random.default_rng(seed)
    u, z, w = spec.innovations.sample(rng, T)

    with_q = spec.returns is not None
    v_out = np.empty(T + 1)
    r_out = np.empty(T + 1)
    q_out = np.empty(T + 1) if with_q else None
    v_out[0], r_out[0] = v0, r0
    if q_out is not None:
        q_out[0] = q0

    alpha, beta = spec.vix.alpha, spec.vix.beta
    a, b, c = spec.rate.a, spec.rate.b, spec.rate.c
    if with_q:
        k, m, h, l = spec.returns.k, spec.returns.m, spec.returns.h, spec.returns.l

    ln_v = math.log(v0)
    r = r0
    for t in range(T):
        ln_v = alpha + beta * ln_v + w[t]
        if not abs(ln_v) <= LOG_V_LIMIT:
            raise DivergenceError(
                f"|ln V| exceeded {LOG_V_LIMIT:g} at step {t + 1}", step=t + 1
            )
        v = math.exp(ln_v)
        r_prev = r
        r = a + b * r_prev + c * v + v * z[t]
        if not math.isfinite(r):
            raise DivergenceError(f"rate became non-finite at step {t + 1}", step=t + 1)
        v_out[t + 1] = v
        r_out[t + 1] = r
        if with_q:
            q = k * r_prev - m * (r - r_prev) + h * v + l + v * u[t]
            if not math.isfinite(q):
                raise DivergenceError(f"return became non-finite at step {t + 1}", step=t + 1)
            q_out[t + 1] = q

    return SimulationPath(
        seed=seed,
        v=v_out,
        r=r_out,
        q=q_out,
        innovations_u=u,
        innovations_z=z,
        innovations_w=w,
    )


@dataclass(frozen=True)
class Finding:
    check: str
    severity: str  # "violation" | "warning" | "info" | "unverifiable"
    message: str

    def as_dict(self) -> dict:
        return {"check": self.check, "severity": self.severity, "message": self.message}


def _mgf_probe(w_sample: np.ndarray, exponents=(0.1, 0.25, 0.5)) -> tuple[bool, str]:
    """Empirical check that exp(u W) has a stable, finite sample mean."""
    half = len(w_sample) // 2
    for u in exponents:
        with np.errstate(over="ignore"):
            vals = np.exp(u * w_sample)
        m1 = float(np.mean(vals[:half]))
        m2 = float(np.mean(vals[half:]))
        if not (math.isfinite(m1) and math.isfinite(m2)):
            return False, f"sample mean of exp({u} W) overflows"
        ratio = m1 / m2 if m2 > 0 else math.inf
        if not 1.0 / 3.0 <= ratio <= 3.0:
            return False, f"sample mean of exp({u} W) is unstable across halves (ratio {ratio:.2f})"
    return True, "sample means of exp(u W) finite and stable for u in " + str(tuple(exponents))


_PROBE_SEED = 772003
_PROBE_DRAWS = 8192


def validate_assumptions(spec: JointModelSpec) -> list[Finding]:
    """Check the stationarity/ergodicity premises behind the chain; never raises.

    Findings with severity ``violation`` should block simulation in strict
    pipelines.  The everywhere-positive-density premise cannot be verified
    for a resampling source and is reported as ``unverifiable``.
    """
    findings: list[Finding] = []

    if 0.0 < spec.rate.b < 1.0:
        findings.append(Finding("rate_mean_reversion", "info", f"b = {spec.rate.b:.4f} lies in (0, 1)"))
    else:
        findings.append(
            Finding(
                "rate_mean_reversion",
                "violation",
                f"rate persistence b = {spec.rate.b:.4f} is outside (0, 1); the rate chain does not mean-revert",
            )
        )
    if 0.0 < spec.vix.beta < 1.0:
        findings.append(Finding("vol_mean_reversion", "info", f"beta = {spec.vix.beta:.4f} lies in (0, 1)"))
    else:
        findings.append(
            Finding(
                "vol_mean_reversion",
                "violation",
                f"volatility persistence beta = {spec.vix.beta:.4f} is outside (0, 1); log-volatility does not mean-revert",
            )
        )

    src = spec.innovations
    if isinstance(src, BootstrapSource):
        rows = src.rows
        names = ("U", "Z", "W")
        bad = []
        for j, name in enumerate(names):
            col = rows[:, j]
            se = float(np.std(col, ddof=1)) / math.sqrt(len(col)) if len(col) > 1 else 0.0
            if se > 0 and abs(float(np.mean(col))) > 3.0 * se:
                bad.append(f"{name} (mean {np.mean(col):.4g}, 3*SE {3 * se:.4g})")
        if bad:
            findings.append(
                Finding(
                    "zero_mean_innovations",
                    "violation",
                    "resampled innovations are not mean zero: " + "; ".join(bad),
                )
            )
        else:
            findings.append(
                Finding("zero_mean_innovations", "info", "resampled innovation means are within 3 standard errors of zero")
            )
        ok, msg = _mgf_probe(rows[:, 2])
        findings.append(Finding("w_exponential_tails", "info" if ok else "warning", msg + " (empirical residuals)"))
        findings.append(
            Finding(
                "positive_innovation_density",
                "unverifiable",
                "a resampling source has discrete support, so an everywhere-positive joint density cannot be verified",
            )
        )
        u_col = rows[:, 0]
        if np.ptp(u_col) > 0:
            d = u_col - u_col.mean()
            exkurt = float(np.mean(d**4) / np.mean(d**2) ** 2 - 3.0)
            if exkurt > 10.0:
                findings.append(
                    Finding(
                        "u_tail_weight",
                        "warning",
                        f"return innovations U look heavy-tailed (excess kurtosis {exkurt:.2f})",
                    )
                )
    else:
        means = src.component_means()
        if np.max(np.abs(means)) > 1e-8:
            findings.append(
                Finding(
                    "zero_mean_innovations",
                    "violation",
                    f"innovation means are not zero: (U, Z, W) = {tuple(round(float(x), 6) for x in means)}",
                )
            )
        else:
            findings.append(Finding("zero_mean_innovations", "info", "innovation means are zero by construction"))
        rng = np.random.default_rng(_PROBE_SEED)
        _, _, w = src.sample(rng, _PROBE_DRAWS)
        ok, msg = _mgf_probe(w)
        findings.append(Finding("w_exponential_tails", "info" if ok else "warning", msg + " (Monte Carlo probe)"))
        if isinstance(src, GaussianSource):
            dim = 3 if spec.returns is not None else 2
            sub = src.cov[3 - dim :, 3 - dim :]
            eig_min = float(np.linalg.eigvalsh(sub)[0])
            if eig_min > 0:
                findings.append(
                    Finding("positive_innovation_density", "info", "Gaussian innovations with full-rank covariance have positive density everywhere")
                )
            else:
                findings.append(
                    Finding(
                        "positive_innovation_density",
                        "warning",
                        "Gaussian innovation covariance is singular; the chain lives on a lower-dimensional set",
                    )
                )
        else:
            if src.w_params.scale > 0 and src.sigma_z > 0 and abs(src.rho_zw) < 1.0:
                findings.append(
                    Finding("positive_innovation_density", "info", "variance-gamma W and Gaussian Z/U put positive density on the whole space")
                )
            else:
                findings.append(
                    Finding(
                        "positive_innovation_density",
                        "warning",
                        "degenerate variance-gamma mix; positive density not guaranteed",
                    )
                )
    return findings


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be non-empty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / len(a)
    cdf_b = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    mean_se: float
    var: float
    var_se: float

    @property
    def std(self) -> float:
        return math.sqrt(self.var)

    def as_dict(self) -> dict:
        return {"mean": self.mean, "mean_se": self.mean_se, "var": self.var, "var_se": self.var_se}


@dataclass(frozen=True)
class ConvergenceReport:
    """Empirical stationarity diagnostic over paired chains."""

    ks_pooled: dict[str, float]
    ks_distance_by_block: list[dict[str, float]]
    burn_in_used: int
    burn_in_estimate: int
    stationary_moment_estimates: dict[str, MomentEstimate]
    threshold: float
    passed: bool
    seed: object
    T: int
    n_pairs: int

    @property
    def max_ks(self) -> float:
        return max(self.ks_pooled.values())

    def as_dict(self) -> dict:
        return {
            "ks_pooled": self.ks_pooled,
            "ks_distance_by_block": self.ks_distance_by_block,
            "burn_in_used": self.burn_in_used,
            "burn_in_estimate": self.burn_in_estimate,
            "stationary_moment_estimates": {
                k: v.as_dict() for k, v in self.stationary_moment_estimates.items()
            },
            "threshold": self.threshold,
            "passed": self.passed,
            "seed": self.seed,
            "T": self.T,
            "n_pairs": self.n_pairs,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _batch_estimate(x: np.ndarray, n_batches: int) -> MomentEstimate:
    """Mean/variance with batch-means standard errors for a dependent sample."""
    n = len(x)
    size = n // n_batches
    trimmed = x[: size * n_batches].reshape(n_batches, size)
    batch_means = trimmed.mean(axis=1)
    batch_vars = trimmed.var(axis=1)
    return MomentEstimate(
        mean=float(np.mean(x)),
        mean_se=float(np.std(batch_means, ddof=1)) / math.sqrt(n_batches),
        var=float(np.var(x)),
        var_se=float(np.std(batch_vars, ddof=1)) / math.sqrt(n_batches),
    )


def anchor_state(spec: JointModelSpec) -> tuple[float, float]:
    """A reasonable launch state: the zero-noise fixed point when it exists."""
    v_anchor = spec.v_star if spec.vix.beta < 1.0 else math.exp(spec.vix.alpha)
    r_anchor = spec.r_star if (spec.rate.b < 1.0 and spec.vix.beta < 1.0) else 0.0
    return v_anchor, r_anchor


def ergodicity_diagnostic(
    spec: JointModelSpec,
    T: int,
    burn_in: int | None = None,
    n_pairs: int = 5,
    seed=0,
    threshold: float = 0.05,
) -> ConvergenceReport:
    """Compare chains launched from deliberately distant initial conditions.

    Each pair runs one chain from a high state (volatility at its fixed point
    times e^{+3 sigma_W}, rate at the fixed point + 10) and one from the
    mirrored low state, with independent seeds.  Post-burn-in samples are
    pooled per arm across pairs and compared coordinate-by-coordinate with
    two-sample KS statistics; the diagnostic passes when the largest pooled
    statistic stays under ``threshold``.  Per-pair statistics are reported as
    blocks for inspection (single-pair KS values are noisier because the
    draws are serially dependent).
    """
    burn_in_estimate = None
    try:
        burn_in_estimate = spec.default_burn_in()
    except ValueError:
        pass
    if burn_in is None:
        if burn_in_estimate is None:
            raise ValueError("burn_in must be given explicitly for a non-mean-reverting spec")
        burn_in = burn_in_estimate
    if burn_in_estimate is None:
        burn_in_estimate = burn_in
    if not T > 2 * burn_in:
        raise ValueError(f"T = {T} must exceed twice the burn-in ({burn_in})")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")

    sigma_w = spec.innovations.w_std
    v_anchor, r_anchor = anchor_state(spec)
    start_high = (v_anchor * math.exp(3.0 * sigma_w), r_anchor + 10.0)
    start_low = (v_anchor * math.exp(-3.0 * sigma_w), r_anchor - 10.0)

    coords = ["V", "R"] + (["Q"] if spec.returns is not None else [])
    pooled: dict[str, list[np.ndarray]] = {c: [[], []] for c in coords}
    by_block: list[dict[str, float]] = []

    for i in range(n_pairs):
        arm_samples: list[dict[str, np.ndarray]] = []
        for arm, start in enumerate((start_high, start_low)):
            path = simulate(spec, T, seed=[seed, i, arm], initial=start)
            sample = {"V": path.v[burn_in + 1 :], "R": path.r[burn_in + 1 :]}
            if spec.returns is not None:
                sample["Q"] = path.q[burn_in + 1 :]
            arm_samples.append(sample)
            for c in coords:
                pooled[c][arm].append(sample[c])
        by_block.append(
            {c: ks_two_sample(arm_samples[0][c], arm_samples[1][c]) for c in coords}
        )

    ks_pooled = {
        c: ks_two_sample(np.concatenate(pooled[c][0]), np.concatenate(pooled[c][1]))
        for c in coords
    }
    moment_estimates = {
        c: _batch_estimate(np.concatenate(pooled[c][0] + pooled[c][1]), n_batches=max(10, 2 * n_pairs))
        for c in coords
    }
    return ConvergenceReport(
        ks_pooled=ks_pooled,
        ks_distance_by_block=by_block,
        burn_in_used=burn_in,
        burn_in_estimate=burn_in_estimate,
        stationary_moment_estimates=moment_estimates,
        threshold=threshold,
        passed=max(ks_pooled.values()) < threshold,
        seed=seed,
        T=T,
        n_pairs=n_pairs,
    )


def stationary_moments(
    spec: JointModelSpec,
    T: int,
    burn_in: int | None = None,
    seed=0,
    n_batches: int = 20,
) -> dict[str, MomentEstimate]:
    """Long-run time-average moments with batch-means standard errors.

    Returns estimates keyed ``v``, ``log_v``, ``r`` and, when the spec has a
    returns equation, ``q``.
    """
    if burn_in is None:
        burn_in = spec.default_burn_in()
    if not T > burn_in + 1000:
        raise ValueError(f"T = {T} must exceed burn_in + 1000 = {burn_in + 1000}")
    v_anchor, r_anchor = anchor_state(spec)
    path = simulate(spec, T, seed=seed, initial=(v_anchor, r_anchor))
    v = path.v[burn_in + 1 :]
    out = {
        "v": _batch_estimate(v, n_batches),
        "log_v": _batch_estimate(np.log(v), n_batches),
        "r": _batch_estimate(path.r[burn_in + 1 :], n_batches),
    }
    if path.q is not None:
        out["q"] = _batch_estimate(path.q[burn_in + 1 :], n_batches)
    return out
