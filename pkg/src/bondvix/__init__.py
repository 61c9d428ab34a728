"""Volatility-linked autoregressive models for corporate bond rates and returns.

The package fits monthly AR(1)-style models for bond rates, spreads, and
total returns in which regression innovations scale with an observable
equity volatility index, runs a residual diagnostic battery on the fits,
and simulates the resulting coupled volatility/rate/return Markov chain
with empirical stationarity checks.
"""

from .datasets import DATASETS, FitInputs, load_dataset
from .diagnostics import (
    AcfResult,
    MomentSummary,
    TestResult,
    acf,
    adf_test,
    correlation,
    jarque_bera,
    ljung_box,
    moments,
    qq_points,
)
from .errors import (
    AlignmentError,
    BondvixError,
    CsvParseError,
    DataDomainError,
    DivergenceError,
    EmptySeriesError,
    InfeasibleMomentsError,
    ModelFileError,
    SingularDesignError,
)
from .models import (
    RateAr,
    RateVolModel,
    ResidualComparison,
    ReturnsModel,
    ReturnsVolModel,
    VixAr,
    build_joint_spec,
    compare_residuals,
    load_model,
    save_model,
)
from .regression import DesignMatrix, OlsFit, ols, t_test_pvalue
from .series import (
    AlignedPanel,
    MonthlySeries,
    align,
    derive_difference,
    derive_log_returns,
    parse_fred_csv,
    to_monthly,
)
from .simulate import (
    BootstrapSource,
    ConvergenceReport,
    Finding,
    GaussianSource,
    JointModelSpec,
    RateParams,
    ReturnsParams,
    SimulationPath,
    VgGaussianSource,
    VixParams,
    ergodicity_diagnostic,
    ks_two_sample,
    simulate,
    stationary_moments,
    validate_assumptions,
)
from .vargamma import VarianceGammaParams, fit_variance_gamma, vg_from_moments

__version__ = "0.1.0"
